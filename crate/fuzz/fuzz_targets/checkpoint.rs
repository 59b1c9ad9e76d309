#![no_main]

use fsltr_tensor::checkpoint::{decode, encode};
use fsltr_tensor::ParamStore;
use libfuzzer_sys::fuzz_target;

// Input layout: manifest JSON, a NUL byte, then the raw blob.
fuzz_target!(|data: &[u8]| {
    let (manifest, blob) = match data.iter().position(|&b| b == 0) {
        Some(i) => (&data[..i], &data[i + 1..]),
        None => (data, &[][..]),
    };
    let Ok(manifest) = std::str::from_utf8(manifest) else {
        return;
    };
    let Ok((decoded, entries)) = decode(manifest, blob) else {
        return;
    };
    let mut store = ParamStore::new();
    for (name, tensor) in &entries {
        store.add(name, tensor.clone());
    }
    let (manifest2, blob2) = encode(&store, decoded.metadata.clone());
    let json = serde_json::to_string(&manifest2).unwrap();
    let (_, again) = decode(&json, &blob2).expect("encoded checkpoint decodes");
    assert_eq!(again.len(), entries.len());
    for ((n1, t1), (n2, t2)) in entries.iter().zip(&again) {
        assert_eq!(n1, n2);
        assert_eq!(t1.shape(), t2.shape());
        let bits = |t: &fsltr_tensor::Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(t1), bits(t2));
    }
});
