//! The two reference classifiers, in a canonical form sized from the window
//! shape and a parity form that reproduces the published parameter table,
//! plus the parity verifier.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::nn::{Model, NnError, LayerSpec, Padding};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    BiLstmNet,
    CnnNet,
}

impl Architecture {
    pub const ALL: [Architecture; 2] = [Architecture::BiLstmNet, Architecture::CnnNet];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::BiLstmNet => "bilstm_net",
            Architecture::CnnNet => "cnn_net",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Architecture::BiLstmNet => "LSTM",
            Architecture::CnnNet => "CNN",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bilstm" | "bilstm_net" | "lstm" => Ok(Architecture::BiLstmNet),
            "cnn" | "cnn_net" => Ok(Architecture::CnnNet),
            _ => Err(ModelError::UnknownArchitecture(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuildMode {
    /// `(L, F)` input from the window. The CNN lays each feature's series
    /// end to end into `(F·L, 1)` before its first convolution.
    Canonical { lookback: usize, features: usize },
    /// Published layer stack on a flat input of the given width.
    Parity { input_width: usize },
}

impl BuildMode {
    pub const PUBLISHED_INPUT_WIDTH: usize = 144;

    pub fn published() -> Self {
        BuildMode::Parity {
            input_width: Self::PUBLISHED_INPUT_WIDTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedLayer {
    pub name: String,
    pub spec: LayerSpec,
}

/// Immutable, shape-checked layer stack.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBlueprint {
    pub architecture: Architecture,
    pub mode: BuildMode,
    input_shape: Vec<usize>,
    layers: Vec<NamedLayer>,
    shapes: Vec<Vec<usize>>,
    pub expected_total_params: Option<usize>,
}

impl ModelBlueprint {
    pub fn new(
        architecture: Architecture,
        mode: BuildMode,
        input_shape: Vec<usize>,
        layers: Vec<NamedLayer>,
    ) -> Result<Self, ModelError> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec.clone()).collect();
        let shapes = Model::shape_chain(&input_shape, &specs)?;
        let expected_total_params = match mode {
            BuildMode::Parity { input_width: BuildMode::PUBLISHED_INPUT_WIDTH } => Some(parity_table(architecture).table_total()),
            _ => None,
        };
        Ok(ModelBlueprint {
            architecture,
            mode,
            input_shape,
            layers,
            shapes,
            expected_total_params,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[NamedLayer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec.clone()).collect()
    }

    /// Output shape of layer `i`.
    pub fn output_shape(&self, i: usize) -> &[usize] {
        &self.shapes[i + 1]
    }

    pub fn total_params(&self) -> usize {
        self.layers.iter().map(|l| l.spec.param_count()).sum()
    }

    /// Copy with layer `index` replaced, re-checked for shape consistency.
    pub fn with_layer(&self, index: usize, spec: LayerSpec) -> Result<Self, ModelError> {
        let mut layers = self.layers.clone();
        layers[index].spec = spec;
        ModelBlueprint::new(self.architecture, self.mode, self.input_shape.clone(), layers)
    }

    pub fn instantiate(&self, seed: u64) -> Result<Model, ModelError> {
        Ok(Model::new(self.architecture.name(), self.input_shape.clone(), self.specs(), seed)?)
    }
}

fn named(name: impl Into<String>, spec: LayerSpec) -> NamedLayer {
    NamedLayer { name: name.into(), spec }
}

fn dense(input: usize, output: usize) -> LayerSpec {
    LayerSpec::Dense { input, output, bias: true }
}

const LSTM_HIDDEN_1: usize = 45;
const LSTM_HIDDEN_2: usize = 21;
const HEAD_WIDTHS: [usize; 3] = [128, 526, 256];

/// Stacked BiLSTM(45) → LSTM(21, last state) → 128 → 526 → 256 → 1 dense
/// head with ReLU between dense layers and a sigmoid output.
pub fn build_lstm_model(mode: BuildMode) -> Result<ModelBlueprint, ModelError> {
    let (input_shape, width) = match mode {
        BuildMode::Canonical { lookback, features } => (vec![lookback, features], features),
        BuildMode::Parity { input_width } => (vec![1, input_width], input_width),
    };
    let mut layers = vec![
        named(
            "bidirectional_1",
            LayerSpec::BiLstm { input: width, hidden: LSTM_HIDDEN_1, return_sequences: true },
        ),
        named(
            "bidirectional_2",
            LayerSpec::Lstm { input: 2 * LSTM_HIDDEN_1, hidden: LSTM_HIDDEN_2, return_sequences: false },
        ),
    ];
    let mut prev = LSTM_HIDDEN_2;
    for (i, &w) in HEAD_WIDTHS.iter().enumerate() {
        layers.push(named(format!("dense_{}", i + 1), dense(prev, w)));
        layers.push(named(format!("relu_{}", i + 1), LayerSpec::Relu));
        prev = w;
    }
    layers.push(named("dense_4", dense(prev, 1)));
    layers.push(named("sigmoid", LayerSpec::Sigmoid));
    ModelBlueprint::new(Architecture::BiLstmNet, mode, input_shape, layers)
}

/// `(kernel, out_channels, padding)` of the eight convolutions.
const CNN_CONVS: [(usize, usize, Padding); 8] = [
    (8, 32, Padding::Valid),
    (5, 32, Padding::Valid),
    (3, 64, Padding::Same),
    (3, 64, Padding::Valid),
    (3, 64, Padding::Valid),
    (2, 128, Padding::Valid),
    (2, 128, Padding::Valid),
    (2, 256, Padding::Valid),
];
const CNN_POOL: usize = 3;
const CNN_DROPOUT: f64 = 0.4;

fn cnn_layers(channels: usize, dense_bias: bool) -> Vec<NamedLayer> {
    let mut layers = Vec::new();
    let mut cin = channels;
    for (i, &(k, cout, padding)) in CNN_CONVS.iter().enumerate() {
        layers.push(named(
            format!("conv1d_{}", i + 1),
            LayerSpec::Conv1d { in_channels: cin, out_channels: cout, kernel_size: k, padding },
        ));
        layers.push(named(format!("conv1d_{}_relu", i + 1), LayerSpec::Relu));
        cin = cout;
        // pooling after the 2nd and 5th convolutions
        if i == 1 || i == 4 {
            let n = if i == 1 { 1 } else { 2 };
            layers.push(named(format!("max_pooling1d_{n}"), LayerSpec::MaxPool1d { pool_size: CNN_POOL }));
        }
    }
    layers.push(named("global_average_pooling1d_1", LayerSpec::GlobalAvgPool1d));
    layers.push(named("dropout_1", LayerSpec::Dropout { rate: CNN_DROPOUT }));
    layers.push(named("dense_1", LayerSpec::Dense { input: cin, output: 1, bias: dense_bias }));
    layers.push(named("sigmoid", LayerSpec::Sigmoid));
    layers
}

/// Eight 1D convolutions with two max-pools, global average pooling,
/// 40% dropout, and a single sigmoid unit.
pub fn build_cnn_model(mode: BuildMode) -> Result<ModelBlueprint, ModelError> {
    match mode {
        BuildMode::Parity { input_width } => {
            // the published dense row carries no bias term
            ModelBlueprint::new(Architecture::CnnNet, mode, vec![input_width, 1], cnn_layers(1, false))
        }
        BuildMode::Canonical { lookback, features } => {
            let attempt = |l: usize| {
                let mut layers = vec![named("channel_series", LayerSpec::ChannelSeries)];
                layers.extend(cnn_layers(1, true));
                ModelBlueprint::new(Architecture::CnnNet, mode, vec![l, features], layers)
            };
            match attempt(lookback) {
                Ok(bp) => Ok(bp),
                Err(ModelError::Nn(NnError::KernelTooLarge { .. } | NnError::PoolTooLarge { .. })) => {
                    let minimum = (lookback + 1..=lookback.max(1) * 64 + 64)
                        .find(|&l| attempt(l).is_ok())
                        .unwrap_or(usize::MAX);
                    Err(ModelError::InputTooShort { lookback, minimum })
                }
                Err(e) => Err(e),
            }
        }
    }
}

pub fn build_model(architecture: Architecture, mode: BuildMode) -> Result<ModelBlueprint, ModelError> {
    match architecture {
        Architecture::BiLstmNet => build_lstm_model(mode),
        Architecture::CnnNet => build_cnn_model(mode),
    }
}

/// One row of the published architecture tables.
#[derive(Clone, Copy, Debug)]
pub struct TableRow {
    pub name: &'static str,
    /// Output shape without the batch axis.
    pub shape: &'static [usize],
    pub params: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct ParityTable {
    pub rows: &'static [TableRow],
    /// Total quoted in the running text next to the table.
    pub stated_total: usize,
    /// Known inconsistencies: `(layer, note)`.
    pub notes: &'static [(&'static str, &'static str)],
}

impl ParityTable {
    pub fn table_total(&self) -> usize {
        self.rows.iter().map(|r| r.params).sum()
    }

    fn note(&self, layer: &str) -> Option<&'static str> {
        self.notes.iter().find(|(n, _)| *n == layer).map(|(_, note)| *note)
    }
}

const fn row(name: &'static str, shape: &'static [usize], params: usize) -> TableRow {
    TableRow { name, shape, params }
}

pub const LSTM_TABLE: ParityTable = ParityTable {
    rows: &[
        row("bidirectional_1", &[1, 90], 68_400),
        row("bidirectional_2", &[21], 9_408),
        row("dense_1", &[128], 2_816),
        row("dense_2", &[526], 67_854),
        row("dense_3", &[256], 134_912),
        row("dense_4", &[1], 257),
    ],
    stated_total: 283_647,
    notes: &[(
        "bidirectional_2",
        "labelled bidirectional, but width 21 is odd and 9,408 = 4*21*(90+21+1) fits one direction only; built as a unidirectional LSTM",
    )],
};

const CONV5_OFFSET: &str = "length offset inherited from conv1d_5 (40 computed vs 38 printed)";

pub const CNN_TABLE: ParityTable = ParityTable {
    rows: &[
        row("conv1d_1", &[137, 32], 288),
        row("conv1d_2", &[133, 32], 5_152),
        row("max_pooling1d_1", &[44, 32], 0),
        row("conv1d_3", &[44, 32], 6_208),
        row("conv1d_4", &[42, 64], 12_352),
        row("conv1d_5", &[38, 64], 12_352),
        row("max_pooling1d_2", &[12, 64], 0),
        row("conv1d_6", &[11, 128], 16_512),
        row("conv1d_7", &[10, 128], 32_896),
        row("conv1d_8", &[9, 256], 65_792),
        row("global_average_pooling1d_1", &[256], 0),
        row("dropout_1", &[256], 0),
        row("dense_1", &[1], 256),
    ],
    stated_total: 151_809,
    notes: &[
        (
            "conv1d_3",
            "shape cell prints 32 channels, but 6,208 = 64*(3*32+1) requires 64 output channels; same padding keeps length 44",
        ),
        (
            "conv1d_5",
            "printed length 38 implies k=5 from 42, but 12,352 = 64*(3*64+1) implies k=3 (length 40); parameter count kept",
        ),
        ("max_pooling1d_2", CONV5_OFFSET),
        ("conv1d_6", CONV5_OFFSET),
        ("conv1d_7", CONV5_OFFSET),
        ("conv1d_8", CONV5_OFFSET),
        (
            "dense_1",
            "row prints 256 (no bias); the stated model total 151,809 counts one more parameter, the output bias",
        ),
    ],
};

pub fn parity_table(architecture: Architecture) -> &'static ParityTable {
    match architecture {
        Architecture::BiLstmNet => &LSTM_TABLE,
        Architecture::CnnNet => &CNN_TABLE,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityFlag {
    Match,
    /// Differs from the table in a documented way.
    Known,
    Mismatch,
    /// Layer has no table row (activations).
    NotListed,
}

impl ParityFlag {
    pub fn label(self) -> &'static str {
        match self {
            ParityFlag::Match => "match",
            ParityFlag::Known => "known",
            ParityFlag::Mismatch => "MISMATCH",
            ParityFlag::NotListed => "-",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityRow {
    pub name: String,
    pub kind: &'static str,
    pub expected_params: Option<usize>,
    pub computed_params: usize,
    pub expected_shape: Option<Vec<usize>>,
    pub computed_shape: Vec<usize>,
    pub flag: ParityFlag,
    pub note: Option<String>,
}

impl ParityRow {
    pub fn params_match(&self) -> bool {
        self.expected_params.is_none_or(|e| e == self.computed_params)
    }

    pub fn shape_match(&self) -> bool {
        self.expected_shape.as_ref().is_none_or(|e| *e == self.computed_shape)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityReport {
    pub architecture: Architecture,
    pub rows: Vec<ParityRow>,
    pub table_total: usize,
    pub stated_total: usize,
    pub computed_total: usize,
    pub total_note: Option<String>,
}

impl ParityReport {
    pub fn unexpected(&self) -> impl Iterator<Item = &ParityRow> {
        self.rows.iter().filter(|r| r.flag == ParityFlag::Mismatch)
    }

    pub fn has_unexpected(&self) -> bool {
        self.unexpected().next().is_some() || self.computed_total != self.table_total
    }

    pub fn row(&self, name: &str) -> Option<&ParityRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Tab-separated: `layer kind expected_params computed_params
    /// expected_shape computed_shape flag note`, then a total line.
    pub fn render(&self) -> String {
        let shape = |s: &[usize]| format!("(bs,{})", s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","));
        let mut out = String::new();
        writeln!(out, "# parity report: {}", self.architecture).unwrap();
        writeln!(out, "layer\tkind\texpected\tcomputed\texpected_shape\tcomputed_shape\tflag\tnote").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.name,
                r.kind,
                r.expected_params.map_or("-".to_string(), |v| v.to_string()),
                r.computed_params,
                r.expected_shape.as_deref().map_or("-".to_string(), shape),
                shape(&r.computed_shape),
                r.flag.label(),
                r.note.as_deref().unwrap_or("")
            )
            .unwrap();
        }
        writeln!(
            out,
            "total\t-\t{}\t{}\t-\t-\t{}\tstated total {}{}",
            self.table_total,
            self.computed_total,
            if self.computed_total == self.table_total { "match" } else { "MISMATCH" },
            self.stated_total,
            self.total_note.as_deref().map(|n| format!("; {n}")).unwrap_or_default()
        )
        .unwrap();
        out
    }
}

/// Compares every layer of a blueprint against the built-in table. Never
/// fails; see [`verify_parity`] for the checked form.
pub fn parity_report(bp: &ModelBlueprint) -> ParityReport {
    let table = parity_table(bp.architecture);
    let mut rows = Vec::with_capacity(bp.layers().len());
    for (i, layer) in bp.layers().iter().enumerate() {
        let computed_params = layer.spec.param_count();
        let computed_shape = bp.output_shape(i).to_vec();
        let entry = table.rows.iter().find(|r| r.name == layer.name);
        let note = table.note(&layer.name);
        let mut row = ParityRow {
            name: layer.name.clone(),
            kind: layer.spec.kind(),
            expected_params: entry.map(|e| e.params),
            computed_params,
            expected_shape: entry.map(|e| e.shape.to_vec()),
            computed_shape,
            flag: ParityFlag::NotListed,
            note: note.map(str::to_string),
        };
        if entry.is_some() {
            row.flag = match (row.params_match(), row.shape_match()) {
                (true, true) => ParityFlag::Match,
                // documented cells only ever disagree on shape
                (true, false) if note.is_some() => ParityFlag::Known,
                _ => ParityFlag::Mismatch,
            };
        }
        rows.push(row);
    }
    for missing in table.rows.iter().filter(|t| !bp.layers().iter().any(|l| l.name == t.name)) {
        rows.push(ParityRow {
            name: missing.name.to_string(),
            kind: "missing",
            expected_params: Some(missing.params),
            computed_params: 0,
            expected_shape: Some(missing.shape.to_vec()),
            computed_shape: Vec::new(),
            flag: ParityFlag::Mismatch,
            note: Some("layer absent from blueprint".into()),
        });
    }
    let table_total = table.table_total();
    let total_note = (table.stated_total != table_total).then(|| {
        format!(
            "differs from the table sum {} by {}: output dense bias",
            table_total,
            table.stated_total as i64 - table_total as i64
        )
    });
    ParityReport {
        architecture: bp.architecture,
        rows,
        table_total,
        stated_total: table.stated_total,
        computed_total: bp.total_params(),
        total_note,
    }
}

pub fn verify_parity(bp: &ModelBlueprint) -> Result<ParityReport, ModelError> {
    if !matches!(bp.mode, BuildMode::Parity { .. }) {
        return Err(ModelError::NotParityMode);
    }
    let report = parity_report(bp);
    let first_bad = report.unexpected().next().cloned();
    if let Some(bad) = first_bad {
        let (expected, computed) = if bad.params_match() {
            (format!("{:?}", bad.expected_shape.clone().unwrap_or_default()), format!("{:?}", bad.computed_shape))
        } else {
            (
                bad.expected_params.map_or("-".into(), |v| v.to_string()),
                bad.computed_params.to_string(),
            )
        };
        return Err(ModelError::UnexpectedMismatch {
            layer: bad.name,
            expected,
            computed,
            report: Box::new(report),
        });
    }
    if report.computed_total != report.table_total {
        return Err(ModelError::UnexpectedMismatch {
            layer: "total".into(),
            expected: report.table_total.to_string(),
            computed: report.computed_total.to_string(),
            report: Box::new(report),
        });
    }
    Ok(report)
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("lookback {lookback} is too short for the convolution chain; at least {minimum} hours required")]
    InputTooShort { lookback: usize, minimum: usize },
    #[error("unexpected parity mismatch at {layer}: expected {expected}, computed {computed}")]
    UnexpectedMismatch {
        layer: String,
        expected: String,
        computed: String,
        report: Box<ParityReport>,
    },
    #[error("parity verification needs a parity-mode blueprint")]
    NotParityMode,
    #[error("unknown model {0:?} (expected bilstm_net or cnn_net)")]
    UnknownArchitecture(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    #[test]
    fn lstm_parity_counts() {
        let bp = build_lstm_model(BuildMode::published()).unwrap();
        assert_eq!(bp.total_params(), 283_647);
        let counts: Vec<usize> = bp.layers().iter().map(|l| l.spec.param_count()).filter(|&c| c > 0).collect();
        assert_eq!(counts, vec![68_400, 9_408, 2_816, 67_854, 134_912, 257]);
        assert_eq!(bp.output_shape(0), &[1, 90]);
        assert_eq!(bp.output_shape(1), &[21]);
    }

    #[test]
    fn canonical_lstm_first_layer() {
        let bp = build_lstm_model(BuildMode::Canonical { lookback: 24, features: 5 }).unwrap();
        assert_eq!(bp.layers()[0].spec.param_count(), 18_360);
        assert_eq!(bp.input_shape(), &[24, 5]);
        // stored arrays agree with the formula
        let model = bp.instantiate(0).unwrap();
        let stored: usize = model.layers()[0].params.iter().map(|p| p.values.len()).sum();
        assert_eq!(stored, 2 * 4 * 45 * (5 + 45 + 1));
    }

    #[test]
    fn dense_heads_agree_across_modes() {
        let head = |bp: &ModelBlueprint| -> Vec<usize> {
            bp.layers().iter().filter(|l| l.name.starts_with("dense")).map(|l| l.spec.param_count()).collect()
        };
        let parity = build_lstm_model(BuildMode::published()).unwrap();
        let canonical = build_lstm_model(BuildMode::Canonical { lookback: 12, features: 5 }).unwrap();
        assert_eq!(head(&parity), vec![2_816, 67_854, 134_912, 257]);
        assert_eq!(head(&parity), head(&canonical));
    }

    #[test]
    fn cnn_parity_counts_and_lengths() {
        let bp = build_cnn_model(BuildMode::published()).unwrap();
        let convs: Vec<usize> = bp
            .layers()
            .iter()
            .filter(|l| l.spec.kind() == "conv1d")
            .map(|l| l.spec.param_count())
            .collect();
        assert_eq!(convs, vec![288, 5_152, 6_208, 12_352, 12_352, 16_512, 32_896, 65_792]);
        assert_eq!(bp.total_params(), 151_808);
        let lengths: Vec<usize> = (0..bp.layers().len())
            .filter(|&i| matches!(bp.layers()[i].spec, LayerSpec::Conv1d { .. } | LayerSpec::MaxPool1d { .. }))
            .map(|i| bp.output_shape(i)[0])
            .collect();
        assert_eq!(lengths, vec![137, 133, 44, 44, 42, 40, 13, 12, 11, 10]);
        let dropout = bp.layers().iter().find(|l| l.name == "dropout_1").unwrap();
        assert_eq!(dropout.spec.param_count(), 0);
    }

    #[test]
    fn canonical_cnn_minimum_lookback() {
        assert!(build_cnn_model(BuildMode::Canonical { lookback: 12, features: 5 }).is_ok());
        assert!(build_cnn_model(BuildMode::Canonical { lookback: 24, features: 5 }).is_ok());
        match build_cnn_model(BuildMode::Canonical { lookback: 11, features: 5 }) {
            Err(ModelError::InputTooShort { lookback: 11, minimum: 12 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lstm_report_all_match() {
        let report = verify_parity(&build_lstm_model(BuildMode::published()).unwrap()).unwrap();
        let listed: Vec<_> = report.rows.iter().filter(|r| r.flag != ParityFlag::NotListed).collect();
        assert_eq!(listed.len(), 6);
        assert!(listed.iter().all(|r| r.flag == ParityFlag::Match));
        assert!(report.row("bidirectional_2").unwrap().note.is_some());
        assert_eq!(report.computed_total, 283_647);
        assert_eq!(report.stated_total, 283_647);
        assert!(report.total_note.is_none());
    }

    #[test]
    fn cnn_report_known_issues() {
        let report = verify_parity(&build_cnn_model(BuildMode::published()).unwrap()).unwrap();
        assert_eq!(report.computed_total, 151_808);
        assert_eq!(report.stated_total, 151_809);
        assert!(report.total_note.as_deref().unwrap().contains("by 1"));
        assert_eq!(report.row("conv1d_3").unwrap().flag, ParityFlag::Known);
        assert_eq!(report.row("conv1d_5").unwrap().flag, ParityFlag::Known);
        assert_eq!(report.row("conv1d_4").unwrap().flag, ParityFlag::Match);
        assert!(report.row("dense_1").unwrap().note.as_deref().unwrap().contains("151,809"));
        assert!(report.rows.iter().filter(|r| r.expected_params.is_some()).all(ParityRow::params_match));
    }

    #[test]
    fn hidden_44_is_unexpected() {
        let bp = build_lstm_model(BuildMode::published()).unwrap();
        let mut layers = bp.layers().to_vec();
        layers[0].spec = LayerSpec::BiLstm { input: 144, hidden: 44, return_sequences: true };
        layers[1].spec = LayerSpec::Lstm { input: 88, hidden: 21, return_sequences: false };
        let bp = ModelBlueprint::new(bp.architecture, bp.mode, bp.input_shape().to_vec(), layers).unwrap();
        match verify_parity(&bp) {
            Err(ModelError::UnexpectedMismatch { layer, expected, computed, .. }) => {
                assert_eq!(layer, "bidirectional_1");
                assert_eq!(expected, "68400");
                assert_eq!(computed, (2 * 4 * 44 * (144 + 44 + 1)).to_string());
                assert_eq!(computed, "66528");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_blueprints_are_not_verified() {
        let bp = build_lstm_model(BuildMode::Canonical { lookback: 12, features: 5 }).unwrap();
        assert!(matches!(verify_parity(&bp), Err(ModelError::NotParityMode)));
    }

    #[test]
    fn zero_input_shape_chaining() {
        for bp in [
            build_lstm_model(BuildMode::published()).unwrap(),
            build_cnn_model(BuildMode::published()).unwrap(),
            build_lstm_model(BuildMode::Canonical { lookback: 12, features: 5 }).unwrap(),
            build_cnn_model(BuildMode::Canonical { lookback: 24, features: 5 }).unwrap(),
        ] {
            let model = bp.instantiate(3).unwrap();
            let mut x = Tensor::zeros(bp.input_shape());
            let mut rng = rand::rngs::mock::StepRng::new(0, 1);
            for (i, layer) in model.layers().iter().enumerate() {
                x = layer.forward(&x, crate::nn::Mode::Eval, &mut rng).unwrap().0;
                assert_eq!(x.shape(), bp.output_shape(i), "{} layer {}", bp.architecture, bp.layers()[i].name);
            }
        }
    }

    #[test]
    fn architecture_names() {
        assert_eq!("bilstm".parse::<Architecture>().unwrap(), Architecture::BiLstmNet);
        assert_eq!("cnn_net".parse::<Architecture>().unwrap(), Architecture::CnnNet);
        assert!("transformer".parse::<Architecture>().is_err());
    }
}
