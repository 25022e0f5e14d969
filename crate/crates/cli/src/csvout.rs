//! CSV assembly. Every float is serialized with 17 significant digits so the
//! artifact round-trips doubles exactly and reruns are byte-comparable;
//! vector-valued fields join components with `;`.

use polyvar::fmt_g17;

pub fn num(x: f64) -> String {
    fmt_g17(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_g17).unwrap_or_default()
}

pub fn vecf(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_g17(x)).collect::<Vec<_>>().join(";")
}

pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            lines: vec![header.to_string()],
        }
    }

    pub fn row(&mut self, fields: &[&str]) {
        debug_assert!(fields.iter().all(|f| !f.contains(',') && !f.contains('\n')));
        self.lines.push(fields.join(","));
    }

    pub fn finish(self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}
