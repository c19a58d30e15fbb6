#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use posterkit::core::metrics::content::SaliencyMask;
use posterkit::core::{Canvas, CategoryVocabulary, Element, LayoutRecord, NormBox, RgbaImage};
use posterkit::data::{Manifest, Split};
use posterkit::io;

pub const W: u32 = 60;
pub const H: u32 = 90;

/// Background `i`: a diagonal gradient with a bright block whose position
/// moves with `i`. The saliency mask marks the same block.
pub fn background(i: usize) -> (RgbaImage, SaliencyMask) {
    let by = (i * 17) % (H as usize - 30);
    let bx = (i * 11) % (W as usize - 20);
    let mut img = RgbaImage::new(W, H, [0, 0, 0, 255]);
    for y in 0..H {
        for x in 0..W {
            let g = ((x + y + i as u32 * 5) % 256) as u8;
            img.put(x, y, [g, 255 - g, (g / 2).wrapping_add(40), 255]);
        }
    }
    let inside = |x: u32, y: u32| {
        (bx..bx + 20).contains(&(x as usize)) && (by..by + 30).contains(&(y as usize))
    };
    for y in 0..H {
        for x in 0..W {
            if inside(x, y) {
                img.put(x, y, [250, 250, 250, 255]);
            }
        }
    }
    let mask = SaliencyMask::from_fn(W, H, |x, y| if inside(x, y) { 1.0 } else { 0.0 });
    (img, mask)
}

/// Ground-truth layout `i`: a text on an underlay, a logo and 0..3 more texts.
pub fn gt_elements(i: usize) -> Vec<Element> {
    let mut els = vec![
        Element::new("underlay", NormBox::new(0.1, 0.6, 0.9, 0.8)),
        Element::new("text", NormBox::new(0.15, 0.65, 0.85, 0.75)).with_text(format!("SALE {i}")),
        Element::new("logo", NormBox::new(0.05, 0.05, 0.25, 0.15)),
    ];
    for k in 0..(i % 4) {
        let t = 0.2 + k as f64 * 0.1;
        els.push(Element::new("text", NormBox::new(0.3, t, 0.7, t + 0.06)));
    }
    els
}

/// Writes `n` records with backgrounds and masks; returns the manifest path.
pub fn write_corpus(dir: &Path, n: usize) -> PathBuf {
    let mut m = Manifest::new("fixture", CategoryVocabulary::posterlayout());
    for i in 0..n {
        let (img, mask) = background(i);
        let bg = format!("images/bg{i:02}.png");
        let sal = format!("saliency/bg{i:02}.png");
        io::save_png(&dir.join(&bg), &img).unwrap();
        io::save_saliency(&dir.join(&sal), &mask).unwrap();
        let mut r = LayoutRecord::new(
            format!("p{i:02}"),
            Canvas::new(W, H).unwrap(),
            "commercial poster",
        )
        .with_elements(gt_elements(i));
        r.background_ref = Some(bg);
        r.saliency_ref = Some(sal);
        m.push(r, Some(Split::Test)).unwrap();
    }
    let path = dir.join("manifest.jsonl");
    m.save(&path, 3).unwrap();
    path
}

pub fn posterkit(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_posterkit"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.env_remove("POSTERKIT_BACKEND");
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
