use layercode::cluster::{ClusterConfig, ClusterDecoder};
use layercode::concat::{ConcatDecoder, InputChoice};
use layercode::css::{CssCode, PauliType};
use layercode::f2::BitVector;
use layercode::layer::{LayerCode, Variant};

fn syndrome(layer: &LayerCode, t: PauliType, e: &BitVector) -> BitVector {
    match t {
        PauliType::X => layer.z_syndrome(e),
        PauliType::Z => layer.x_syndrome(e),
    }
}

fn is_logical(layer: &LayerCode, t: PauliType, residual: &BitVector) -> bool {
    let basis = layer.logical_basis();
    match t {
        PauliType::X => basis.x_is_logical(residual),
        PauliType::Z => basis.z_is_logical(residual),
    }
}

#[test]
fn plain_concat_corrects_single_errors_on_steane() {
    for spacing in [1, 2] {
        let layer = LayerCode::build(&CssCode::steane(), spacing, Variant::Terminated).unwrap();
        for t in [PauliType::Z, PauliType::X] {
            let dec = ConcatDecoder::new(&layer, t, InputChoice::MinWeight, false).unwrap();
            let mut failures = Vec::new();
            for q in 0..layer.num_qubits() {
                let e = BitVector::from_indices(layer.num_qubits(), [q]);
                let s = syndrome(&layer, t, &e);
                let c = dec.decode(&s).unwrap();
                let r = &e ^ &c;
                assert!(syndrome(&layer, t, &r).is_zero());
                if is_logical(&layer, t, &r) {
                    failures.push(q);
                }
            }
            assert!(failures.is_empty(), "K={spacing} {t:?}: {failures:?}");
        }
    }
}

#[test]
fn cluster_corrects_single_x_errors_on_steane() {
    for spacing in [1, 2] {
        for variant in [Variant::Terminated, Variant::Extended] {
            let layer = LayerCode::build(&CssCode::steane(), spacing, variant).unwrap();
            let dec = ClusterDecoder::for_layer(&layer, ClusterConfig::default());
            for q in 0..layer.num_qubits() {
                let e = BitVector::from_indices(layer.num_qubits(), [q]);
                let c = dec.decode(&layer.z_syndrome(&e)).unwrap();
                let r = &e ^ &c;
                assert!(layer.z_syndrome(&r).is_zero());
                assert!(!is_logical(&layer, PauliType::X, &r), "K={spacing} {variant} q={q}");
            }
        }
    }
}
