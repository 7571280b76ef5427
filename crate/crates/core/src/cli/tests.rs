use super::*;
use crate::heptagrid::ball;
use crate::tiles::{KindTag, Placement};
use proptest::prelude::*;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("hyperdomino").chain(args.iter().copied());
    let code = run_command(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn polygons(svg: &str) -> usize {
    svg.matches("<polygon").count()
}

fn mantilla_ball(r: usize) -> Patch {
    let p = grow(&mantilla_tileset(), &shipped_grammar(), 0, r).unwrap();
    let keep = ball(&TileAddress::Center, r).unwrap();
    p.iter().filter(|pl| keep.contains(&pl.address)).cloned().collect()
}

#[test]
fn empty_patch_renders_no_polygons() {
    let svg = render_svg(&Patch::new(), &mantilla_tileset(), &RenderStyle::default()).unwrap();
    assert_eq!(polygons(&svg), 0);
    assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn one_polygon_per_tile() {
    let ts = mantilla_tileset();
    assert_eq!(polygons(&render_svg(&mantilla_ball(1), &ts, &RenderStyle::default()).unwrap()), 8);
    let p = mantilla_ball(3);
    assert_eq!(p.len(), ball(&TileAddress::Center, 3).unwrap().len());
    assert_eq!(polygons(&render_svg(&p, &ts, &RenderStyle::default()).unwrap()), 85);
}

#[test]
fn rendering_is_deterministic_and_flower_colouring_works() {
    let ts = mantilla_tileset();
    let p = mantilla_ball(3);
    let style = RenderStyle { by_flower: true, ..RenderStyle::default() };
    let a = render_svg(&p, &ts, &style).unwrap();
    assert_eq!(a, render_svg(&p, &ts, &style).unwrap());
    assert_ne!(a, render_svg(&p, &ts, &RenderStyle::default()).unwrap());
    assert!(a.contains(r#"<g fill="red">"#));
}

#[test]
fn red_glyphs_are_shared() {
    let ts = mantilla_tileset();
    let p = mantilla_ball(3);
    let svg = render_svg(&p, &ts, &RenderStyle::default()).unwrap();
    let dots = svg.matches("<circle").count() - 1;
    let marks: usize = p
        .iter()
        .map(|pl| (0..7).filter(|&v| ts.get(&pl.type_id).unwrap().vertex_at(pl.rotation, v) == crate::tiles::VertexMark::Red).count())
        .sum();
    assert!(dots > 0 && dots < marks);
    let plain = render_svg(&p, &ts, &RenderStyle { red_vertices: false, ..RenderStyle::default() }).unwrap();
    assert_eq!(plain.matches("<circle").count(), 1);
}

#[test]
fn style_files_merge_over_defaults() {
    let s = RenderStyle::from_toml("stroke_width = 1.5\n[kind_colors]\nPetal = \"#000000\"\n").unwrap();
    assert_eq!(s.stroke_width, 1.5);
    assert_eq!(s.kind_colors["Petal"], "#000000");
    assert_eq!(s.kind_colors.len(), KindTag::ALL.len());
    assert!(matches!(RenderStyle::from_toml("[kind_colors]\nHex = \"red\"\n"), Err(CliError::Style(_))));
    assert!(matches!(RenderStyle::from_toml("colour = 1\n"), Err(CliError::Style(_))));
}

#[test]
fn gen_mantilla_then_check_and_render() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let patch = dir.join("p.patch");
    let (code, out, _) = run(&["gen-mantilla", "--radius", "2", "--seed", "7", "--out", patch.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("placements"));
    let p = parse_patch(&std::fs::read_to_string(&patch).unwrap()).unwrap();
    assert!(p.len() >= 29);

    let tiles = dir.join("mantilla.tiles");
    std::fs::write(&tiles, write_tileset(&mantilla_tileset())).unwrap();
    let (code, out, _) = run(&["check", patch.to_str().unwrap(), "--tileset", tiles.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "0 violations");

    let (code, svg, _) = run(&["render", patch.to_str().unwrap(), "--radius", "2"]);
    assert_eq!(code, 0);
    assert_eq!(polygons(&svg), 29);
}

#[test]
fn seeded_generation_is_reproducible() {
    let a = run(&["gen-mantilla", "--radius", "3", "--seed", "11"]);
    let b = run(&["gen-mantilla", "--radius", "3", "--seed", "11"]);
    assert_eq!(a.0, 0);
    assert_eq!(a, b);
}

#[test]
fn check_reports_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let patch = dir.join("bad.patch");
    let mut p = mantilla_ball(1);
    let pl = p.get(&TileAddress::Center).unwrap().clone();
    p.insert(Placement::new(pl.address, pl.type_id, (pl.rotation + 1) % 7));
    std::fs::write(&patch, write_patch(&p)).unwrap();
    let (code, out, _) = run(&["check", patch.to_str().unwrap()]);
    assert_eq!(code, 0);
    let n: usize = out.lines().last().unwrap().trim_end_matches(" violations").parse().unwrap();
    assert!(n > 0);
    assert_eq!(out.lines().count(), n + 1);
}

#[test]
fn solve_reports_sat_and_unsat() {
    let (code, out, _) = run(&["solve", "--radius", "1"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "Sat 8 placements");

    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let tiles = dir.join("clash.tiles");
    let clash = crate::tiles::TileSet::new(
        "clash",
        vec![crate::tiles::TileType {
            id: "a".into(),
            kind: KindTag::Computation,
            edges: [1, 2, 1, 2, 1, 2, 1].map(crate::tiles::EdgeColor::num),
            vertices: [crate::tiles::VertexMark::Plain; 7],
        }],
        Vec::new(),
    )
    .unwrap();
    std::fs::write(&tiles, write_tileset(&clash)).unwrap();
    let cert = dir.join("c.cert");
    let (code, out, _) =
        run(&["solve", "--tileset", tiles.to_str().unwrap(), "--radius", "1", "--certificate", cert.to_str().unwrap()]);
    assert_eq!(code, 0, "Unsat is a result, not an error");
    assert!(out.starts_with("Unsat"), "{}", out);
    let c = crate::tiles::UnsatCertificate::from_text(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    let region = Region::Ball { center: TileAddress::Center, radius: 1 };
    assert!(crate::tiles::verify_unsat_certificate(&clash, &region, &c).unwrap());
}

#[test]
fn machines_compile_and_run() {
    let (code, out, _) = run(&["run-tm", "halting3", "--steps", "10"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 4);
    let (code, out, _) = run(&["compile-tm", "writer"]);
    assert_eq!(code, 0);
    assert!(out.contains("writer: 77 tiles (formula 77)"), "{}", out);
}

#[test]
fn reduce_certifies_a_halting_machine() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let report = dir.join("halting3.report");
    let (code, out, _) = run(&["reduce", "halting3.tm", "--max-depth", "9", "--radius", "5", "--out", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("radius 5: Unsat certified"), "{}", out);
    assert!(out.contains("certificate radius 5:"));
    assert!(dir.join("halting3.report.r5.cert").is_file());
    assert_eq!(std::fs::read_to_string(&report).unwrap(), out);
}

#[test]
fn usage_errors_exit_2_and_name_the_flag() {
    let (code, _, err) = run(&["gen-mantilla", "--radius", "two"]);
    assert_eq!(code, 2);
    assert!(err.contains("--radius"), "{}", err);
    let (code, _, err) = run(&["solve", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("--bogus"));
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn domain_errors_exit_1() {
    let (code, _, err) = run(&["check", "/nonexistent/p.patch"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/p.patch"));
    assert_eq!(run(&["run-tm", "no-such-machine"]).0, 1);
}

fn arb_patch() -> impl Strategy<Value = Patch> {
    let addr = (0u8..7, proptest::collection::vec(0u8..2, 0..5));
    proptest::collection::vec((addr, "[A-Za-z0-9.@+!>_|-]{1,10}", 0u8..7), 0..30).prop_map(|v| {
        v.into_iter()
            .filter_map(|((s, path), id, rot)| {
                let text = format!("s:{}/{}", s, path.iter().map(u8::to_string).collect::<Vec<_>>().join("."));
                text.parse::<TileAddress>().ok().map(|a| Placement::new(a, id, rot))
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patch_files_round_trip(p in arb_patch()) {
        let text = write_patch(&p);
        let q = parse_patch(&text).unwrap();
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(write_patch(&q), text);
    }
}
