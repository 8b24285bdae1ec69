use mubs_core::linalg::{Matrix, Tolerance};
use mubs_core::mub::{construct_complete, verify_mub, MubError, MubSystem};
use mubs_core::witness::{delsarte_audit, h_witness};

#[test]
fn complete_systems_saturate_the_bound() {
    let tol = Tolerance::default();
    for d in [2usize, 3, 5, 7, 9, 11, 13, 25, 27] {
        let sys = construct_complete(d).unwrap();
        assert_eq!(sys.len(), d + 1, "d={d}");
        for (i, b) in sys.bases().iter().enumerate() {
            assert!(b.unitarity_defect() <= 1e-10, "d={d} basis {i}");
        }
        let v = verify_mub(&sys, &tol);
        assert!(v.ok && v.worst_deviation <= 1e-10, "d={d} {v:?}");
        let audit = delsarte_audit(&sys, &h_witness(d)).unwrap();
        assert!(audit.valid, "d={d} {audit:?}");
        assert!(audit.gap() <= 1e-6, "d={d} {audit:?}");
        assert!((audit.upper - audit.lower).abs() <= 1e-9, "d={d}");
    }
}

#[test]
fn largest_supported_field() {
    let sys = construct_complete(49).unwrap();
    assert_eq!(sys.len(), 50);
    assert!(verify_mub(&sys, &Tolerance::default()).ok);
}

#[test]
fn unsupported_dimensions() {
    assert!(matches!(
        construct_complete(4),
        Err(MubError::EvenPrimePower(4))
    ));
    assert!(matches!(
        construct_complete(8),
        Err(MubError::EvenPrimePower(8))
    ));
    assert!(matches!(
        construct_complete(6),
        Err(MubError::UnsupportedDimension(6))
    ));
    assert!(matches!(
        construct_complete(10),
        Err(MubError::UnsupportedDimension(10))
    ));
    assert!(matches!(
        construct_complete(121),
        Err(MubError::AboveCap { q: 121, .. })
    ));
}

#[test]
fn dropping_bases_keeps_unbiasedness_and_a_valid_audit() {
    let sys = construct_complete(5).unwrap();
    let partial = MubSystem::new(5, sys.bases()[..3].to_vec()).unwrap();
    assert!(verify_mub(&partial, &Tolerance::default()).ok);
    let audit = delsarte_audit(&partial, &h_witness(5)).unwrap();
    assert!(audit.valid);
    // Strict slack on the lower side for an incomplete family.
    assert!(audit.s - audit.lower > 1.0);
}

#[test]
fn biased_family_fails_verification_and_audit() {
    let sys = MubSystem::new(3, vec![Matrix::identity(3), Matrix::identity(3)]).unwrap();
    assert!(!verify_mub(&sys, &Tolerance::default()).ok);
    assert!(!delsarte_audit(&sys, &h_witness(3)).unwrap().valid);
}
