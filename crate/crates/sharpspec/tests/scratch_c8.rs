use std::time::Instant;

use sharpspec::complex::domain::DomainSpec;
use sharpspec::sharp_spectra::{curl_sharp_dense_oracle, curl_sharp_eigs, CurlParams};

#[test]
#[ignore]
fn bench_c8_cube() {
    let spec: DomainSpec =
        serde_json::from_str(r#"{"shape": "box", "h": 0.125, "extent": [1.0, 1.0, 1.0]}"#)
            .unwrap();
    let domain = spec.voxelize().unwrap();
    println!("domain shape {:?} voxels", domain.shape);
    let params = CurlParams::new(5);
    let t0 = Instant::now();
    let (eig, mut op) = curl_sharp_eigs(&domain, &params).unwrap();
    println!(
        "iterative: {:?}, {} verified, {} unverified, meta {:?}",
        t0.elapsed(),
        eig.eigenvalues.len(),
        eig.unverified.len(),
        eig.meta
    );
    println!("values {:?}", eig.eigenvalues);
    println!("defects {:?}", eig.defects);
    println!("edges {}", op.edge_dim());
    let t1 = Instant::now();
    let dense = curl_sharp_dense_oracle(&mut op, 1e-10).unwrap();
    println!("dense oracle: {:?}, {} values", t1.elapsed(), dense.eigenvalues.len());
    let mut dense_abs: Vec<f64> = dense.eigenvalues.iter().map(|x| x.abs()).collect();
    dense_abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("dense first 12 {:?}", &dense_abs[..dense_abs.len().min(12)]);
}
