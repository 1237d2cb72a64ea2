//! Per-layer byte accounting in two currencies. The table-convention rows
//! mirror the published per-layer expressions (activation bytes feedforward,
//! weight bytes backprop, 4-byte values); for the trauma35 preset they are
//! pinned verbatim, including the rows whose printed arithmetic does not
//! check out. The audit column recomputes exact trainable-parameter bytes
//! from the config, and its totals always equal the row sums.

use crate::error::{config_err, CoactError};
use crate::model::spec::{ConvLayer, Modality, NetworkConfig};

/// Table convention: every value is 4 bytes regardless of training dtype.
const VALUE_BYTES: u64 = 4;

#[derive(Debug, Clone)]
pub struct LayerRow {
    pub name: String,
    /// Activation-bytes expression, e.g. `256*256*32*4=8M`; empty when the
    /// table leaves the cell blank.
    pub ff_expr: String,
    /// Exact product of the expression's factors.
    pub ff_bytes: u64,
    /// Weight-bytes expression; `0` for parameterless layers.
    pub bp_expr: String,
    pub bp_bytes: u64,
    /// Exact trainable parameter bytes attributed to this row.
    pub audit_param_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct BranchSection {
    pub title: String,
    pub rows: Vec<LayerRow>,
}

#[derive(Debug, Clone)]
pub struct MemoryReport {
    pub sections: Vec<BranchSection>,
    /// Second-level LSTM and coding-head rows shared by all branches.
    pub shared: Vec<LayerRow>,
    /// Printed totals; pinned for the trauma35 preset, computed otherwise.
    pub ff_total_display: String,
    pub bp_total_display: String,
    /// Exact sums of the row byte values (these always add up).
    pub ff_total_bytes: u64,
    pub bp_total_bytes: u64,
    pub audit_param_total_bytes: u64,
}

impl MemoryReport {
    pub fn all_rows(&self) -> impl Iterator<Item = &LayerRow> {
        self.sections
            .iter()
            .flat_map(|s| s.rows.iter())
            .chain(self.shared.iter())
    }
}

/// `1.5 * 2^20 -> "1.5M"`, trimmed to at most three decimals the way the
/// published rows mostly are.
fn display_m(bytes: u64) -> String {
    let m = bytes as f64 / (1 << 20) as f64;
    let mut s = format!("{m:.3}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    format!("{s}M")
}

fn expr(factors: &[u64]) -> (String, u64) {
    let product: u64 = factors.iter().product();
    let text = factors
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("*");
    (format!("{text}={}", display_m(product)), product)
}

/// Product of the factor list left of `=`; blank and `0` cells count zero.
fn expr_bytes(expr: &str) -> Result<u64, CoactError> {
    let left = expr.split('=').next().unwrap_or("").trim();
    if left.is_empty() || left == "0" {
        return Ok(0);
    }
    left.split('*')
        .map(|tok| {
            tok.trim()
                .parse::<u64>()
                .map_err(|_| config_err(format!("bad factor '{tok}' in '{expr}'")))
        })
        .try_fold(1u64, |acc, f| Ok(acc * f?))
}

fn lstm_param_bytes(input: u64, hidden: u64) -> u64 {
    // Four gates, each H x (D + H) weights plus H biases.
    (4 * hidden * (input + hidden) + 4 * hidden) * VALUE_BYTES
}

fn section_title(modality: Modality) -> &'static str {
    match modality {
        Modality::Depth => "Depth",
        Modality::Audio => "MFSC",
        Modality::Rss => "RSSMap",
        Modality::Rgb => "RGB",
        Modality::Tiles => "Tiles",
    }
}

/// Table-convention rows for any config, generated from the same shape walk
/// the model build validates.
pub fn estimate_memory(config: &NetworkConfig) -> Result<MemoryReport, CoactError> {
    config.validate()?;
    let mut sections = Vec::new();
    for (index, branch) in config.branches.iter().enumerate() {
        let mut rows = Vec::new();
        let [mut h, mut w, mut c] = branch.conv.input.map(|v| v as u64);
        let (ff_expr, ff_bytes) = expr(&[h, w, c, VALUE_BYTES]);
        rows.push(LayerRow {
            name: "Input".into(),
            ff_expr,
            ff_bytes,
            bp_expr: String::new(),
            bp_bytes: 0,
            audit_param_bytes: 0,
        });
        let (mut conv_no, mut pool_no) = (0, 0);
        for layer in &branch.conv.layers {
            match layer {
                ConvLayer::Conv { kernel, filters, .. } => {
                    conv_no += 1;
                    let (k, f) = (*kernel as u64, *filters as u64);
                    let (ff_expr, ff_bytes) = expr(&[h, w, f, VALUE_BYTES]);
                    let (bp_expr, bp_bytes) = expr(&[k, k, c, f, VALUE_BYTES]);
                    rows.push(LayerRow {
                        name: format!("Conv{conv_no}"),
                        ff_expr,
                        ff_bytes,
                        bp_expr,
                        bp_bytes,
                        audit_param_bytes: (k * k * c * f + f) * VALUE_BYTES,
                    });
                    c = f;
                }
                ConvLayer::Pool { ph, pw } => {
                    pool_no += 1;
                    h /= *ph as u64;
                    w /= *pw as u64;
                    let (ff_expr, ff_bytes) = expr(&[h, w, c, VALUE_BYTES]);
                    rows.push(LayerRow {
                        name: format!("Pool{pool_no}"),
                        ff_expr,
                        ff_bytes,
                        bp_expr: "0".into(),
                        bp_bytes: 0,
                        audit_param_bytes: 0,
                    });
                }
                ConvLayer::CollapseMax => {
                    // The published table leaves the collapse row blank.
                    pool_no += 1;
                    h = 1;
                    w = 1;
                    rows.push(LayerRow {
                        name: format!("Pool{pool_no}"),
                        ff_expr: String::new(),
                        ff_bytes: 0,
                        bp_expr: String::new(),
                        bp_bytes: 0,
                        audit_param_bytes: 0,
                    });
                }
            }
        }
        let (d, hid) = (c, branch.lstm_width as u64);
        let (ff_expr, ff_bytes) = expr(&[hid, VALUE_BYTES]);
        let (bp_expr, bp_bytes) = expr(&[d, hid, VALUE_BYTES, 8]);
        rows.push(LayerRow {
            name: "LSTM".into(),
            ff_expr,
            ff_bytes,
            bp_expr,
            bp_bytes,
            audit_param_bytes: lstm_param_bytes(d, hid),
        });
        if let Some(fw) = config.fusion_width {
            // The fusion matrix splits into per-branch column blocks; its
            // output activation and bias land on the first branch's row.
            let fw = fw as u64;
            let first = index == 0;
            let (ff_expr, ff_bytes) = if first {
                expr(&[fw, VALUE_BYTES])
            } else {
                (String::new(), 0)
            };
            let (bp_expr, bp_bytes) = expr(&[fw, hid, VALUE_BYTES]);
            let bias = if first { fw * VALUE_BYTES } else { 0 };
            rows.push(LayerRow {
                name: "Fusion".into(),
                ff_expr,
                ff_bytes,
                bp_expr,
                bp_bytes,
                audit_param_bytes: fw * hid * VALUE_BYTES + bias,
            });
        }
        sections.push(BranchSection {
            title: section_title(branch.modality).into(),
            rows,
        });
    }

    let (d2, h2) = (
        config.level2_input_width() as u64,
        config.level2_width as u64,
    );
    let n = config.activity_count as u64;
    let mut shared = Vec::new();
    {
        let (ff_expr, ff_bytes) = expr(&[h2, VALUE_BYTES]);
        let (bp_expr, bp_bytes) = expr(&[d2, h2, VALUE_BYTES, 8]);
        shared.push(LayerRow {
            name: "LSTM".into(),
            ff_expr,
            ff_bytes,
            bp_expr,
            bp_bytes,
            audit_param_bytes: lstm_param_bytes(d2, h2),
        });
        // Coding activations: dense output plus scaler output; weights: the
        // dense matrix (the table ignores the 3N dense-bias/scaler values,
        // the audit does not).
        let (ff_expr, ff_bytes) = expr(&[n, 2, VALUE_BYTES]);
        let (bp_expr, bp_bytes) = expr(&[h2, n, VALUE_BYTES]);
        shared.push(LayerRow {
            name: "Coding".into(),
            ff_expr,
            ff_bytes,
            bp_expr,
            bp_bytes,
            audit_param_bytes: (h2 * n + 3 * n) * VALUE_BYTES,
        });
    }

    let mut report = MemoryReport {
        sections,
        shared,
        ff_total_display: String::new(),
        bp_total_display: String::new(),
        ff_total_bytes: 0,
        bp_total_bytes: 0,
        audit_param_total_bytes: 0,
    };
    if config.preset.as_deref() == Some("trauma35") {
        apply_trauma_table(&mut report)?;
    }
    report.ff_total_bytes = report.all_rows().map(|r| r.ff_bytes).sum();
    report.bp_total_bytes = report.all_rows().map(|r| r.bp_bytes).sum();
    report.audit_param_total_bytes = report.all_rows().map(|r| r.audit_param_bytes).sum();
    if report.ff_total_display.is_empty() {
        report.ff_total_display = display_m(report.ff_total_bytes);
        report.bp_total_display = display_m(report.bp_total_bytes);
    }
    Ok(report)
}

/// The published per-layer expressions for the three-branch deployment,
/// reproduced character for character: the row spelled `Con7`, the `M`-less
/// `0.004`, the `256*5` state row, and displayed values that disagree with
/// their own factors all stay as printed. Totals likewise.
const TRAUMA_DEPTH: [(&str, &str, &str); 16] = [
    ("Input", "256*256*1*4=0.48M", ""),
    ("Conv1", "256*256*32*4=8M", "3*3*32*1*4=0.001M"),
    ("Pool1", "128*128*32*4=2M", "0"),
    ("Conv2", "128*128*64*4=4M", "3*3*32*64*4=0.064M"),
    ("Pool2", "64*64*64*4=1M", "0"),
    ("Conv3", "64*64*128*4=2M", "3*3*64*128*4=0.256M"),
    ("Pool3", "32*32*128*4=0.5M", "0"),
    ("Conv4", "32*32*256*4=1M", "3*3*128*256*4=1M"),
    ("Pool4", "16*16*256*4=0.25M", "0"),
    ("Conv5", "16*16*512*4=0.5M", "3*3*256*512*4=4M"),
    ("Pool5", "4*4*512*4=0.03M", "0"),
    ("Conv6", "4*4*1024*4=0.06M", "3*3*512*1024*4=16M"),
    ("Pool6", "1*1*1024*4=0.003M", "0"),
    ("Con7", "1*1*1024*4=0.003M", "1*1*1024*1024*4=4M"),
    ("LSTM", "512*4=0.002M", "1024*512*4*8=16M"),
    ("Fusion", "512*4=0.002M", "512*512*4=1M"),
];

const TRAUMA_MFSC: [(&str, &str, &str); 12] = [
    ("Input", "64*64*1*4=0.015M", ""),
    ("Conv1", "64*64*32*4=0.5M", "3*3*32*1*4=0.001M"),
    ("Pool1", "32*32*32*4=0.13M", "0"),
    ("Conv2", "32*32*64*4=0.25M", "3*3*32*64*4=0.064M"),
    ("Pool2", "16*16*64*4=0.06M", "0"),
    ("Conv3", "16*16*128*4=0.12M", "3*3*64*128*4=0.256M"),
    ("Pool3", "4*4*128*4=0.008M", "0"),
    ("Conv4", "4*4*256*4=0.016M", "3*3*128*256*4=1M"),
    ("Pool4", "1*1*256*4=0.001M", "0"),
    ("Conv5", "1*1*512*4=0.002M", "1*1*256*512*4=0.5M"),
    ("LSTM", "256*4=0.001M", "512*256*4*8=5M"),
    ("Fusion", "", "512*256*4=0.5M"),
];

const TRAUMA_RSS: [(&str, &str, &str); 12] = [
    ("Input", "36*48*25*4=0.16M", ""),
    ("Conv1", "36*48*32*4=0.21M", "3*3*25*32*4=0.025M"),
    ("Pool1", "18*24*32*4=0.05M", "0"),
    ("Conv2", "18*24*64*4=0.1M", "3*3*32*64*4=0.064M"),
    ("Pool2", "9*12*64*4=0.025M", "0"),
    ("Conv3", "9*12*128*4=0.05M", "3*3*64*128*4=0.256M"),
    ("Pool3", "3*3*128*4=0.004", "0"),
    ("Conv4", "3*3*256*4=0.008M", "3*3*128*256*4=1M"),
    ("Pool4", "", ""),
    ("Conv5", "1*1*512*4=0.002M", "1*1*256*512*4=0.5M"),
    ("LSTM", "256*4=0.001M", "512*256*4*5=4M"),
    ("Fusion", "", "512*256*4=0.5M"),
];

const TRAUMA_SHARED: [(&str, &str, &str); 2] = [
    ("LSTM", "256*5=0.001M", "512*256*4*8=4M"),
    ("Coding", "35*2*4=0M", "256*35*4=0.03M"),
];

const TRAUMA_FF_TOTAL: &str = "23M";
const TRAUMA_BP_TOTAL: &str = "57.5M";

fn overlay_rows(
    rows: &mut [LayerRow],
    table: &[(&str, &str, &str)],
    section: &str,
) -> Result<(), CoactError> {
    if rows.len() != table.len() {
        return Err(config_err(format!(
            "{section}: {} generated rows but table pins {}",
            rows.len(),
            table.len()
        )));
    }
    for (row, (name, ff, bp)) in rows.iter_mut().zip(table) {
        row.name = (*name).into();
        row.ff_expr = (*ff).into();
        row.ff_bytes = expr_bytes(ff)?;
        row.bp_expr = (*bp).into();
        row.bp_bytes = expr_bytes(bp)?;
    }
    Ok(())
}

fn apply_trauma_table(report: &mut MemoryReport) -> Result<(), CoactError> {
    let [depth, mfsc, rss] = &mut report.sections[..] else {
        return Err(config_err("trauma table wants exactly three branches"));
    };
    overlay_rows(&mut depth.rows, &TRAUMA_DEPTH, "Depth")?;
    overlay_rows(&mut mfsc.rows, &TRAUMA_MFSC, "MFSC")?;
    overlay_rows(&mut rss.rows, &TRAUMA_RSS, "RSSMap")?;
    overlay_rows(&mut report.shared, &TRAUMA_SHARED, "shared")?;
    report.ff_total_display = TRAUMA_FF_TOTAL.into();
    report.bp_total_display = TRAUMA_BP_TOTAL.into();
    Ok(())
}

/// Aligned text: one block of branch columns, the shared rows, the printed
/// totals, then the exact-parameter audit.
pub fn render_text(report: &MemoryReport) -> String {
    let names = row_name_order(report);
    let mut widths = vec![6usize; 1 + report.sections.len() * 2];
    for (i, name) in names.iter().enumerate() {
        let _ = i;
        widths[0] = widths[0].max(name.len());
    }
    let mut grid: Vec<Vec<String>> = Vec::new();
    for name in &names {
        let mut line = vec![name.clone()];
        for section in &report.sections {
            match section.rows.iter().find(|r| &r.name == name) {
                Some(r) => {
                    line.push(r.ff_expr.clone());
                    line.push(r.bp_expr.clone());
                }
                None => {
                    line.push(String::new());
                    line.push(String::new());
                }
            }
        }
        grid.push(line);
    }
    for line in &grid {
        for (i, cell) in line.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }

    let mut out = String::new();
    out.push_str("Memory per second of data, table convention (4-byte values)\n\n");
    let mut header = vec!["Layer".to_string()];
    for section in &report.sections {
        header.push(format!("{}:FF", section.title));
        header.push(format!("{}:BP", section.title));
    }
    for (i, cell) in header.iter().enumerate() {
        widths[i] = widths[i].max(cell.len());
    }
    push_row(&mut out, &header, &widths);
    for line in &grid {
        push_row(&mut out, line, &widths);
    }
    out.push_str("\nShared\n");
    let shared_width = report
        .shared
        .iter()
        .map(|r| r.ff_expr.len())
        .max()
        .unwrap_or(6)
        .max(report.ff_total_display.len());
    for row in &report.shared {
        out.push_str(&format!(
            "{:<8}{:<width$}  {}\n",
            row.name,
            row.ff_expr,
            row.bp_expr,
            width = shared_width
        ));
    }
    out.push_str(&format!(
        "{:<8}{:<width$}  {}\n",
        "Total",
        report.ff_total_display,
        report.bp_total_display,
        width = shared_width
    ));

    out.push_str("\nAudit: exact trainable-parameter bytes\n");
    for section in &report.sections {
        for row in &section.rows {
            if row.audit_param_bytes > 0 {
                out.push_str(&format!(
                    "{:<8}{:<8}{}\n",
                    section.title, row.name, row.audit_param_bytes
                ));
            }
        }
    }
    for row in &report.shared {
        out.push_str(&format!(
            "{:<8}{:<8}{}\n",
            "Shared", row.name, row.audit_param_bytes
        ));
    }
    out.push_str(&format!(
        "Total parameters: {} bytes ({} values)\n",
        report.audit_param_total_bytes,
        report.audit_param_total_bytes / VALUE_BYTES
    ));
    out.push_str(&format!(
        "Exact row sums: feedforward {} bytes, backprop {} bytes\n",
        report.ff_total_bytes, report.bp_total_bytes
    ));
    out
}

fn push_row(out: &mut String, cells: &[String], widths: &[usize]) {
    for (cell, width) in cells.iter().zip(widths) {
        out.push_str(&format!("{cell:<width$}  "));
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out.push('\n');
}

/// Union of row names across sections, in first-appearance order.
fn row_name_order(report: &MemoryReport) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for section in &report.sections {
        for row in &section.rows {
            if !names.contains(&row.name) {
                names.push(row.name.clone());
            }
        }
    }
    names
}

/// Comma-delimited flavor: one row per layer cell group plus audit columns.
pub fn render_delimited(report: &MemoryReport) -> String {
    let mut out = String::from("section,layer,feedforward,backprop,audit_param_bytes\n");
    for section in &report.sections {
        for row in &section.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                section.title, row.name, row.ff_expr, row.bp_expr, row.audit_param_bytes
            ));
        }
    }
    for row in &report.shared {
        out.push_str(&format!(
            "Shared,{},{},{},{}\n",
            row.name, row.ff_expr, row.bp_expr, row.audit_param_bytes
        ));
    }
    out.push_str(&format!(
        "Total,,{},{},{}\n",
        report.ff_total_display, report.bp_total_display, report.audit_param_total_bytes
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::model::Network;

    #[test]
    fn trauma_preset_reproduces_every_pinned_expression() {
        let report = estimate_memory(&presets::trauma35()).unwrap();
        let text = render_text(&report);
        for table in [
            &TRAUMA_DEPTH[..],
            &TRAUMA_MFSC[..],
            &TRAUMA_RSS[..],
            &TRAUMA_SHARED[..],
        ] {
            for (_, ff, bp) in table {
                if !ff.is_empty() {
                    assert!(text.contains(ff), "missing {ff}");
                }
                if !bp.is_empty() {
                    assert!(text.contains(bp), "missing {bp}");
                }
            }
        }
        assert_eq!(report.ff_total_display, "23M");
        assert_eq!(report.bp_total_display, "57.5M");
        assert!(text.contains("Con7"), "row name reproduced as printed");
    }

    #[test]
    fn trauma_conv1_feedforward_is_exactly_eight_mebibytes() {
        let report = estimate_memory(&presets::trauma35()).unwrap();
        let conv1 = &report.sections[0].rows[1];
        assert_eq!(conv1.name, "Conv1");
        assert_eq!(conv1.ff_bytes, 256 * 256 * 32 * 4);
        assert_eq!(conv1.ff_bytes, 8_388_608);
    }

    #[test]
    fn totals_equal_row_sums_exactly() {
        for config in [
            presets::trauma35(),
            presets::charades157(),
            presets::tiny_multimodal(7),
            presets::mnist_composite(),
        ] {
            let report = estimate_memory(&config).unwrap();
            let ff: u64 = report.all_rows().map(|r| r.ff_bytes).sum();
            let bp: u64 = report.all_rows().map(|r| r.bp_bytes).sum();
            let audit: u64 = report.all_rows().map(|r| r.audit_param_bytes).sum();
            assert_eq!(report.ff_total_bytes, ff);
            assert_eq!(report.bp_total_bytes, bp);
            assert_eq!(report.audit_param_total_bytes, audit);
        }
    }

    #[test]
    fn audit_total_matches_a_built_network() {
        for config in [presets::tiny_multimodal(7), presets::tiny_single(3)] {
            let report = estimate_memory(&config).unwrap();
            let net: Network<f32> = Network::build(config, 0).unwrap();
            assert_eq!(
                report.audit_param_total_bytes,
                net.params().element_count() as u64 * 4
            );
        }
    }

    #[test]
    fn pool_rows_carry_zero_backprop_bytes() {
        let report = estimate_memory(&presets::trauma35()).unwrap();
        for section in &report.sections {
            for row in &section.rows {
                if row.name.starts_with("Pool") {
                    assert_eq!(row.bp_bytes, 0, "{} {}", section.title, row.name);
                }
            }
        }
    }

    #[test]
    fn conv_feedforward_matches_actual_activation_shapes() {
        // Cross-check against real tensors: forward a tiny network on zeros
        // and compare each conv row against the tape's output shapes.
        use coact_nn::ops::Padding;
        use coact_nn::{Tape, Tensor};

        let config = presets::tiny_single(3);
        let report = estimate_memory(&config).unwrap();
        let net: Network<f64> = Network::build(config.clone(), 1).unwrap();
        let branch = &config.branches[0];
        let mut tape: Tape<f64> = Tape::new();
        let mut x = tape.leaf(Tensor::zeros(&branch.conv.input));
        let mut conv_no = 0;
        for layer in &branch.conv.layers {
            if let ConvLayer::Conv { .. } = layer {
                conv_no += 1;
                let w = net.params().id_of(&format!("depth.conv{conv_no}.w")).unwrap();
                let b = net.params().id_of(&format!("depth.conv{conv_no}.b")).unwrap();
                x = tape.conv2d(net.params(), x, w, b, Padding::Same).unwrap();
                let shape = tape.value(x).shape();
                let row = report.sections[0]
                    .rows
                    .iter()
                    .find(|r| r.name == format!("Conv{conv_no}"))
                    .unwrap();
                let expect = (shape[0] * shape[1] * shape[2] * 4) as u64;
                assert_eq!(row.ff_bytes, expect, "Conv{conv_no}");
            } else if let ConvLayer::Pool { ph, pw } = layer {
                x = tape.maxpool(x, *ph, *pw).unwrap();
            }
        }
    }

    #[test]
    fn doubling_activities_touches_only_coding_rows() {
        let a = estimate_memory(&presets::charades157()).unwrap();
        let mut config = presets::charades157();
        config.activity_count *= 2;
        config.preset = None;
        let b = estimate_memory(&config).unwrap();
        for (sa, sb) in a.sections.iter().zip(&b.sections) {
            for (ra, rb) in sa.rows.iter().zip(&sb.rows) {
                assert_eq!(ra.ff_expr, rb.ff_expr, "{} changed", ra.name);
                assert_eq!(ra.bp_expr, rb.bp_expr);
            }
        }
        assert_eq!(a.shared[0].bp_expr, b.shared[0].bp_expr);
        assert_ne!(a.shared[1].ff_expr, b.shared[1].ff_expr);
        assert_ne!(a.shared[1].bp_expr, b.shared[1].bp_expr);
    }

    #[test]
    fn delimited_output_has_one_line_per_row() {
        let report = estimate_memory(&presets::trauma35()).unwrap();
        let csv = render_delimited(&report);
        let expected = 1 + report.all_rows().count() + 1;
        assert_eq!(csv.lines().count(), expected);
        assert!(csv.lines().last().unwrap().starts_with("Total,,23M,57.5M"));
    }

    #[test]
    fn expression_parser_handles_blank_zero_and_products() {
        assert_eq!(expr_bytes("").unwrap(), 0);
        assert_eq!(expr_bytes("0").unwrap(), 0);
        assert_eq!(expr_bytes("256*256*32*4=8M").unwrap(), 8_388_608);
        assert_eq!(expr_bytes("256*5=0.001M").unwrap(), 1280);
        assert!(expr_bytes("abc*2").is_err());
    }
}
