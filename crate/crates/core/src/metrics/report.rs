//! Per-sequence metric rows and benchmark table aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::refraction::SeverityLevel;
use crate::wavefield::WaveType;

use super::{psnr, ssim};

/// A restoration output: one image, or a list of frames scored one by one.
#[derive(Debug, Clone)]
pub enum Prediction {
    Single(Image),
    Frames(Vec<Image>),
}

/// One row of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub sequence_id: String,
    pub method: String,
    pub wave_type: WaveType,
    pub level: SeverityLevel,
    /// Mean over finite per-frame values; `inf` when every frame is identical to the reference.
    pub psnr_db: f64,
    pub ssim: f64,
    pub n_frames_evaluated: usize,
    pub multi_frame: bool,
    /// Frames whose PSNR was infinite and left out of the mean.
    pub psnr_inf_frames: usize,
    pub lpips_vgg: Option<f64>,
    pub lpips_alex: Option<f64>,
    pub dino: Option<f64>,
    pub clip: Option<f64>,
}

/// Scores a prediction against `gt`. Multi-frame predictions are scored per
/// frame and the metric values (dB for PSNR) are averaged.
pub fn evaluate_method(
    method: &str,
    sequence_id: &str,
    wave_type: WaveType,
    level: SeverityLevel,
    prediction: &Prediction,
    gt: &Image,
) -> Result<MetricRow> {
    let (frames, multi_frame): (&[Image], bool) = match prediction {
        Prediction::Single(img) => (std::slice::from_ref(img), false),
        Prediction::Frames(list) => (list.as_slice(), true),
    };
    if frames.is_empty() {
        return Err(Error::Input(format!("{method}: empty prediction list for {sequence_id}")));
    }
    let mut psnr_sum = 0.0;
    let mut finite = 0usize;
    let mut ssim_sum = 0.0;
    for f in frames {
        let p = psnr(f, gt)?;
        if p.is_finite() {
            psnr_sum += p;
            finite += 1;
        }
        ssim_sum += ssim(f, gt)?;
    }
    Ok(MetricRow {
        sequence_id: sequence_id.to_string(),
        method: method.to_string(),
        wave_type,
        level,
        psnr_db: if finite == 0 { f64::INFINITY } else { psnr_sum / finite as f64 },
        ssim: ssim_sum / frames.len() as f64,
        n_frames_evaluated: frames.len(),
        multi_frame,
        psnr_inf_frames: frames.len() - finite,
        lpips_vgg: None,
        lpips_alex: None,
        dino: None,
        clip: None,
    })
}

pub fn write_report_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    crate::renderer::io::write_atomic(path, report_csv(rows)?.as_bytes())
}

pub fn report_csv(rows: &[MetricRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Aggregation(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Aggregation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Aggregation(e.to_string()))
}

pub fn parse_report_csv(text: &str) -> Result<Vec<MetricRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Aggregation(e.to_string()))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report_csv(&text)
}

/// Mean metrics of one (method, wave type, level) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub method: String,
    pub multi_frame: bool,
    pub wave_type: WaveType,
    pub level: SeverityLevel,
    pub psnr_db: f64,
    pub ssim: f64,
    pub n_sequences: usize,
    /// Sequences with infinite PSNR, excluded from `psnr_db`.
    pub psnr_inf_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub methods: Vec<String>,
    pub columns: Vec<(WaveType, SeverityLevel)>,
    pub cells: BTreeMap<(String, WaveType, SeverityLevel), AggregateCell>,
}

pub fn aggregate_table(rows: &[MetricRow]) -> Result<BenchmarkTable> {
    let mut seen = BTreeSet::new();
    let mut methods: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(String, WaveType, SeverityLevel), Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        if !seen.insert((r.method.clone(), r.wave_type, r.level, r.sequence_id.clone())) {
            return Err(Error::Aggregation(format!(
                "duplicate row for {} / {} / {} / {}",
                r.method, r.wave_type, r.level, r.sequence_id
            )));
        }
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
        groups.entry((r.method.clone(), r.wave_type, r.level)).or_default().push(r);
    }
    let mut columns: Vec<(WaveType, SeverityLevel)> = groups.keys().map(|k| (k.1, k.2)).collect();
    columns.sort();
    columns.dedup();
    let cells = groups
        .into_iter()
        .map(|(key, members)| {
            let finite: Vec<f64> = members.iter().map(|r| r.psnr_db).filter(|v| v.is_finite()).collect();
            let psnr_db = if finite.is_empty() {
                f64::INFINITY
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            };
            let cell = AggregateCell {
                method: key.0.clone(),
                multi_frame: members.iter().any(|r| r.multi_frame),
                wave_type: key.1,
                level: key.2,
                psnr_db,
                ssim: members.iter().map(|r| r.ssim).sum::<f64>() / members.len() as f64,
                n_sequences: members.len(),
                psnr_inf_count: members.len() - finite.len(),
            };
            (key, cell)
        })
        .collect();
    Ok(BenchmarkTable {
        methods,
        columns,
        cells,
    })
}

fn level_letter(l: SeverityLevel) -> &'static str {
    match l {
        SeverityLevel::Low => "L",
        SeverityLevel::Mid => "M",
        SeverityLevel::High => "H",
        SeverityLevel::Extreme => "E",
    }
}

impl BenchmarkTable {
    pub fn cell(&self, method: &str, wave: WaveType, level: SeverityLevel) -> Option<&AggregateCell> {
        self.cells.get(&(method.to_string(), wave, level))
    }

    /// Methods holding the column best (ties share it) for a higher-is-better metric.
    pub fn column_best(&self, column: (WaveType, SeverityLevel), metric: impl Fn(&AggregateCell) -> f64) -> Vec<String> {
        let values: Vec<(String, f64)> = self
            .methods
            .iter()
            .filter_map(|m| self.cell(m, column.0, column.1).map(|c| (m.clone(), metric(c))))
            .collect();
        let best = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        values.into_iter().filter(|v| v.1 == best).map(|v| v.0).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for m in &self.methods {
            for &(wave, level) in &self.columns {
                if let Some(c) = self.cell(m, wave, level) {
                    w.serialize(c).map_err(|e| Error::Aggregation(e.to_string()))?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Aggregation(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Aggregation(e.to_string()))
    }

    pub fn parse_csv(text: &str) -> Result<Vec<AggregateCell>> {
        csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Aggregation(e.to_string()))
    }

    /// Aligned text tables (PSNR, then SSIM); column bests wrapped in `**`,
    /// multi-frame methods suffixed with `*`, empty cells shown as `—`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let blocks: [(&str, fn(&AggregateCell) -> f64, usize); 2] =
            [("PSNR (dB)", |c| c.psnr_db, 2), ("SSIM", |c| c.ssim, 3)];
        for (bi, (title, metric, decimals)) in blocks.into_iter().enumerate() {
            if bi > 0 {
                out.push('\n');
            }
            let header: Vec<String> = std::iter::once(title.to_string())
                .chain(self.columns.iter().map(|(w, l)| format!("{w} {}", level_letter(*l))))
                .collect();
            let bests: Vec<Vec<String>> = self.columns.iter().map(|&c| self.column_best(c, metric)).collect();
            let mut lines = vec![header];
            for m in &self.methods {
                let multi = self.cells.values().any(|c| &c.method == m && c.multi_frame);
                let mut line = vec![if multi { format!("{m}*") } else { m.clone() }];
                for (ci, &(wave, level)) in self.columns.iter().enumerate() {
                    line.push(match self.cell(m, wave, level) {
                        None => "—".to_string(),
                        Some(c) => {
                            let v = metric(c);
                            let s = if v.is_finite() { format!("{v:.decimals$}") } else { "inf".to_string() };
                            if bests[ci].contains(m) {
                                format!("**{s}**")
                            } else {
                                s
                            }
                        }
                    });
                }
                lines.push(line);
            }
            let widths: Vec<usize> = (0..lines[0].len())
                .map(|i| lines.iter().map(|l| l[i].chars().count()).max().unwrap_or(0))
                .collect();
            for l in &lines {
                for (i, cell) in l.iter().enumerate() {
                    let pad = widths[i] - cell.chars().count();
                    if i == 0 {
                        let _ = write!(out, "{cell}{}", " ".repeat(pad));
                    } else {
                        let _ = write!(out, "  {}{cell}", " ".repeat(pad));
                    }
                }
                out.push('\n');
            }
        }
        let inf: usize = self.cells.values().map(|c| c.psnr_inf_count).sum();
        if inf > 0 {
            let _ = writeln!(out, "\nnote: {inf} sequence(s) with infinite PSNR excluded from PSNR means");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, seq: &str, wave: WaveType, level: SeverityLevel, p: f64, s: f64) -> MetricRow {
        MetricRow {
            sequence_id: seq.into(),
            method: method.into(),
            wave_type: wave,
            level,
            psnr_db: p,
            ssim: s,
            n_frames_evaluated: 1,
            multi_frame: false,
            psnr_inf_frames: 0,
            lpips_vgg: None,
            lpips_alex: None,
            dino: None,
            clip: None,
        }
    }

    fn gt() -> Image {
        Image::from_fn(16, 16, 3, |x, y, c| ((x * 5 + y * 3 + c) % 13) as f32 / 12.0)
    }

    fn shifted(v: f32) -> Image {
        let g = gt();
        Image::from_fn(16, 16, 3, |x, y, c| g.get(x, y, c) + v)
    }

    #[test]
    fn frame_list_averages_decibels() {
        let g = Image::filled(16, 16, 3, 0.5);
        // uniform errors of 0.1 and 0.031622.. give 20 and 30 dB
        let a = Image::filled(16, 16, 3, 0.6);
        let b = Image::filled(16, 16, 3, 0.5 + 0.1f32 / 10f32.sqrt());
        let r = evaluate_method("m", "s", WaveType::Ocean, SeverityLevel::Low, &Prediction::Frames(vec![a, b]), &g)
            .unwrap();
        assert!((r.psnr_db - 25.0).abs() < 1e-4, "{}", r.psnr_db);
        assert_eq!(r.n_frames_evaluated, 2);
        assert!(r.multi_frame);
    }

    #[test]
    fn identical_frames_match_single_path() {
        let p = shifted(0.02);
        let single =
            evaluate_method("m", "s", WaveType::Sine, SeverityLevel::High, &Prediction::Single(p.clone()), &gt())
                .unwrap();
        let multi = evaluate_method(
            "m",
            "s",
            WaveType::Sine,
            SeverityLevel::High,
            &Prediction::Frames(vec![p.clone(), p.clone(), p]),
            &gt(),
        )
        .unwrap();
        assert!((single.psnr_db - multi.psnr_db).abs() < 1e-12);
        assert!((single.ssim - multi.ssim).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_list_is_rejected() {
        let r = evaluate_method("m", "s", WaveType::Ocean, SeverityLevel::Low, &Prediction::Frames(vec![]), &gt());
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn duplicate_rows_are_rejected() {
        let r = row("a", "s1", WaveType::Ocean, SeverityLevel::Low, 20.0, 0.5);
        assert!(matches!(aggregate_table(&[r.clone(), r]), Err(Error::Aggregation(_))));
    }

    #[test]
    fn single_row_table() {
        let t = aggregate_table(&[row("a", "s1", WaveType::Ocean, SeverityLevel::Low, 20.0, 0.5)]).unwrap();
        assert_eq!(t.methods, vec!["a"]);
        assert_eq!(t.columns.len(), 1);
        assert!(t.to_text().contains("**20.00**"));
    }

    #[test]
    fn dominant_method_takes_every_bold_mark() {
        let mut rows = Vec::new();
        for (i, wave) in [WaveType::Ocean, WaveType::Ripples].into_iter().enumerate() {
            for level in [SeverityLevel::Low, SeverityLevel::High] {
                let seq = format!("s{i}{level}");
                rows.push(row("good", &seq, wave, level, 30.0, 0.9));
                rows.push(row("bad", &seq, wave, level, 10.0, 0.2));
            }
        }
        let t = aggregate_table(&rows).unwrap();
        for &c in &t.columns {
            assert_eq!(t.column_best(c, |x| x.psnr_db), vec!["good"]);
            assert_eq!(t.column_best(c, |x| x.ssim), vec!["good"]);
        }
        let text = t.to_text();
        assert_eq!(text.matches("**").count(), 2 * 2 * t.columns.len());
        assert!(text.lines().filter(|l| l.starts_with("bad")).all(|l| !l.contains("**")));
    }

    #[test]
    fn missing_cells_render_as_dash() {
        let rows = vec![
            row("a", "s1", WaveType::Ocean, SeverityLevel::Low, 20.0, 0.5),
            row("b", "s2", WaveType::Sine, SeverityLevel::Low, 21.0, 0.6),
        ];
        assert!(aggregate_table(&rows).unwrap().to_text().contains('—'));
    }

    #[test]
    fn infinite_psnr_is_excluded_with_note() {
        let rows = vec![
            row("a", "s1", WaveType::Ocean, SeverityLevel::Low, 20.0, 0.5),
            row("a", "s2", WaveType::Ocean, SeverityLevel::Low, f64::INFINITY, 1.0),
        ];
        let t = aggregate_table(&rows).unwrap();
        let c = t.cell("a", WaveType::Ocean, SeverityLevel::Low).unwrap();
        assert_eq!(c.psnr_db, 20.0);
        assert_eq!(c.psnr_inf_count, 1);
        assert!(t.to_text().contains("infinite PSNR"));
    }

    #[test]
    fn report_csv_round_trips() {
        let mut r = row("a", "ocean/low/x_1", WaveType::Ocean, SeverityLevel::Low, 23.456789012345678, 0.1234567);
        r.dino = Some(0.25);
        let rows = vec![r, row("b", "s2", WaveType::Ripples, SeverityLevel::Extreme, f64::INFINITY, 1.0)];
        let back = parse_report_csv(&report_csv(&rows).unwrap()).unwrap();
        assert_eq!(back, rows);
    }
}
