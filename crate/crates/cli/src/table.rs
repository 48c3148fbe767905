//! CSV tables whose rational cells are exact `p/q` strings, each followed by
//! a decimal column.

use anticoncentration::scalar::format_decimal;
use anticoncentration::Rational;

/// `p/q`, with an explicit denominator even for integers.
pub fn exact(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default)]
pub struct Row {
    names: Vec<String>,
    cells: Vec<String>,
}

impl Row {
    pub fn new() -> Row {
        Row::default()
    }

    pub fn text(mut self, name: &str, value: impl ToString) -> Row {
        self.names.push(name.to_string());
        self.cells.push(value.to_string());
        self
    }

    pub fn q(self, name: &str, x: &Rational) -> Row {
        let dec = format_decimal(x);
        self.text(name, exact(x)).text(&format!("{name}_dec"), dec)
    }

    pub fn qs(self, name: &str, xs: &[Rational]) -> Row {
        let exact_cells: Vec<String> = xs.iter().map(exact).collect();
        let dec: Vec<String> = xs.iter().map(format_decimal).collect();
        self.text(name, exact_cells.join(";"))
            .text(&format!("{name}_dec"), dec.join(";"))
    }

    pub fn opt_q(self, name: &str, x: Option<&Rational>) -> Row {
        match x {
            Some(x) => self.q(name, x),
            None => self.text(name, "").text(&format!("{name}_dec"), ""),
        }
    }
}

impl Table {
    pub fn push(&mut self, row: Row) {
        if self.rows.is_empty() && self.header.is_empty() {
            self.header = row.names;
        } else {
            assert_eq!(self.header, row.names, "rows of one table share columns");
        }
        self.rows.push(row.cells);
    }

    pub fn single(row: Row) -> Table {
        let mut t = Table::default();
        t.push(row);
        t
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).expect("write to memory");
        for r in &self.rows {
            w.write_record(r).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 cells")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anticoncentration::scalar::{int, ratio};

    #[test]
    fn rationals_render_exactly_with_decimals() {
        let t = Table::single(Row::new().q("rho", &ratio(3, 8)).qs("ls", &[int(1), ratio(1, 2)]));
        assert_eq!(
            t.to_csv(),
            "rho,rho_dec,ls,ls_dec\n3/8,0.375000000000,1/1;1/2,1.000000000000;0.500000000000\n"
        );
    }

    #[test]
    fn cells_with_commas_are_quoted() {
        let t = Table::single(Row::new().text("set", "[1,2]"));
        assert_eq!(t.to_csv(), "set\n\"[1,2]\"\n");
    }
}
