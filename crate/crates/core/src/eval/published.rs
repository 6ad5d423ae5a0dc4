//! Published reference results for the four Schedule P lines, carried for
//! side-by-side display. None of these are recomputed here.

/// Models of the published comparison, in column order.
pub const MODELS: [&str; 6] = ["Mack", "ODP", "CIT", "LIT", "ML", "DT"];

/// Models shown next to the computed ones in reports.
pub const DISPLAYED: [&str; 3] = ["ODP", "CIT", "LIT"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub line: &'static str,
    pub mape: [f64; 6],
    pub rmspe: [f64; 6],
}

pub const TABLE: [PublishedRow; 4] = [
    PublishedRow {
        line: "commercial_auto",
        mape: [0.060, 0.217, 0.052, 0.052, 0.068, 0.043],
        rmspe: [0.080, 0.822, 0.076, 0.074, 0.096, 0.057],
    },
    PublishedRow {
        line: "other_liability",
        mape: [0.134, 0.223, 0.165, 0.152, 0.142, 0.109],
        rmspe: [0.202, 0.477, 0.220, 0.209, 0.181, 0.150],
    },
    PublishedRow {
        line: "private_passenger_auto",
        mape: [0.038, 0.039, 0.038, 0.040, 0.036, 0.025],
        rmspe: [0.061, 0.063, 0.057, 0.060, 0.059, 0.039],
    },
    PublishedRow {
        line: "workers_compensation",
        mape: [0.053, 0.105, 0.054, 0.054, 0.067, 0.046],
        rmspe: [0.079, 0.368, 0.080, 0.080, 0.099, 0.067],
    },
];

/// Canonical line name for the common spellings (`comauto`, `wkcomp`, ...).
pub fn canonical_line(name: &str) -> Option<&'static str> {
    let key = name.to_ascii_lowercase().replace(['-', ' '], "_");
    let line = match key.as_str() {
        "commercial_auto" | "comauto" => "commercial_auto",
        "other_liability" | "othliab" => "other_liability",
        "private_passenger_auto" | "ppauto" => "private_passenger_auto",
        "workers_compensation" | "wkcomp" => "workers_compensation",
        _ => return None,
    };
    Some(line)
}

pub fn row(line: &str) -> Option<&'static PublishedRow> {
    let line = canonical_line(line)?;
    TABLE.iter().find(|r| r.line == line)
}

/// `(mape, rmspe)` for one model on one line.
pub fn lookup(line: &str, model: &str) -> Option<(f64, f64)> {
    let r = row(line)?;
    let k = MODELS.iter().position(|m| *m == model)?;
    Some((r.mape[k], r.rmspe[k]))
}
