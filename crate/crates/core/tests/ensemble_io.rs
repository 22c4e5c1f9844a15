use spinwave::ensemble::{AtomCount, AtomicEnsemble, Geometry, PhysicalUnits};
use spinwave::Error;

#[test]
fn save_and_load_through_the_filesystem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.txt");
    let units = PhysicalUnits::from_nm(795.0).unwrap();
    let e = AtomicEnsemble::generate(Geometry::Cube { side_um: 10.0 }, AtomCount::Density(1e11), 42, units).unwrap();
    assert_eq!(e.len(), 100);
    e.save(&path).unwrap();
    let back = AtomicEnsemble::load(&path).unwrap();
    assert_eq!(back.positions(), e.positions());
    assert_eq!(back.units().wavelength_nm(), 795.0);
    assert_eq!(back.content_hash(), e.content_hash());
    assert_eq!(back.density_per_cm3(), e.density_per_cm3());
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(AtomicEnsemble::load(dir.path().join("absent.txt")), Err(Error::Io(_))));
}

#[test]
fn truncated_file_reports_the_last_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.txt");
    let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 2.0 }, AtomCount::Count(5), 1, PhysicalUnits::default())
        .unwrap();
    e.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().take(4).collect();
    std::fs::write(&path, kept.join("\n")).unwrap();
    assert!(matches!(AtomicEnsemble::load(&path), Err(Error::Parse { line: 4, .. })));
}
