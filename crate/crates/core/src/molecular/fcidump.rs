//! FCIDUMP reader and writer.
//!
//! Integral lines are `value i j k l` with 1-based indices:
//! all four nonzero is `(ij|kl)`, `k = l = 0` is `h_ij`, all zero is the core energy,
//! and `j = k = l = 0` (orbital energies) is ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use super::integrals::MolecularIntegrals;
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Splits the namelist body into `KEY -> values`; bare values extend the previous key.
fn parse_namelist(body: &str, line: usize) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    let spaced = body.replace('=', " = ");
    let tokens: Vec<&str> = spaced.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
    let mut i = 0;
    while i < tokens.len() {
        if tokens.get(i + 1) == Some(&"=") {
            let key = tokens[i].to_ascii_uppercase();
            out.entry(key.clone()).or_default();
            current = Some(key);
            i += 2;
            continue;
        }
        if tokens[i] == "=" {
            return Err(parse_err(line, "'=' without a key"));
        }
        match &current {
            Some(k) => out.get_mut(k).expect("inserted").push(tokens[i].to_string()),
            None => return Err(parse_err(line, format!("value '{}' before any key", tokens[i]))),
        }
        i += 1;
    }
    Ok(out)
}

fn header_int(keys: &BTreeMap<String, Vec<String>>, key: &str, line: usize) -> Result<Option<i64>> {
    match keys.get(key) {
        None => Ok(None),
        Some(v) if v.len() == 1 => {
            v[0].parse::<i64>().map(Some).map_err(|_| parse_err(line, format!("{key} is not an integer: {}", v[0])))
        }
        Some(_) => Err(parse_err(line, format!("{key} needs exactly one value"))),
    }
}

pub fn parse_fcidump<R: BufRead>(reader: R) -> Result<MolecularIntegrals> {
    let mut lines = reader.lines().enumerate();

    let mut header = String::new();
    let mut header_end = 0;
    let mut started = false;
    for (no, line) in lines.by_ref() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() && !started {
            continue;
        }
        let mut rest = t;
        if !started {
            let upper = t.to_ascii_uppercase();
            if !upper.starts_with("&FCI") {
                return Err(parse_err(no + 1, "expected '&FCI' namelist header"));
            }
            started = true;
            rest = &t[4..];
        }
        let upper = rest.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END").or_else(|| upper.rfind('/')) {
            header.push_str(&rest[..pos]);
            header_end = no + 1;
            break;
        }
        header.push_str(rest);
        header.push(' ');
    }
    if header_end == 0 {
        return Err(parse_err(1, "unterminated namelist header"));
    }
    let keys = parse_namelist(&header, header_end)?;
    let norb = header_int(&keys, "NORB", header_end)?.ok_or_else(|| parse_err(header_end, "missing NORB"))?;
    let nelec = header_int(&keys, "NELEC", header_end)?.ok_or_else(|| parse_err(header_end, "missing NELEC"))?;
    let ms2 = header_int(&keys, "MS2", header_end)?.unwrap_or(0);
    if norb <= 0 || nelec < 0 || nelec > 2 * norb {
        return Err(parse_err(header_end, format!("inconsistent NORB={norb}, NELEC={nelec}")));
    }
    let n = norb as usize;
    let mut mi = MolecularIntegrals::zeros(n, nelec as usize);
    mi.ms2 = ms2 as i32;

    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(no + 1, format!("expected 5 fields, found {}", fields.len())));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| parse_err(no + 1, format!("non-numeric value '{}'", fields[0])))?;
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            let v: usize = f.parse().map_err(|_| parse_err(no + 1, format!("bad index '{f}'")))?;
            if v > n {
                return Err(Error::IndexOutOfRange { index: v, len: n });
            }
            *slot = v;
        }
        match idx {
            [0, 0, 0, 0] => mi.nuclear_repulsion = value,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                mi.one_body[(i - 1, j - 1)] = value;
                mi.one_body[(j - 1, i - 1)] = value;
            }
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => mi.set_eri_symmetric(i - 1, j - 1, k - 1, l - 1, value),
            _ => return Err(parse_err(no + 1, format!("unsupported index pattern {idx:?}"))),
        }
    }
    Ok(mi)
}

/// Writes an FCIDUMP; `reduced` keeps one representative per symmetry class.
pub fn write_fcidump(mi: &MolecularIntegrals, reduced: bool) -> String {
    let n = mi.n_spatial;
    let mut s = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(s, " &FCI NORB={n},NELEC={},MS2={},", mi.n_electrons, mi.ms2);
    let _ = writeln!(s, "  ORBSYM={orbsym},");
    let _ = writeln!(s, "  ISYM=1,");
    let _ = writeln!(s, " &END");
    let pair = |a: usize, b: usize| a * (a + 1) / 2 + b;
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for t in 0..n {
                    if reduced && !(q <= p && t <= r && pair(r, t) <= pair(p, q)) {
                        continue;
                    }
                    let v = mi.eri(p, q, r, t);
                    if v != 0.0 {
                        let _ = writeln!(s, "{v:.17e} {} {} {} {}", p + 1, q + 1, r + 1, t + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            if reduced && q > p {
                continue;
            }
            let v = mi.one_body[(p, q)];
            if v != 0.0 {
                let _ = writeln!(s, "{v:.17e} {} {} 0 0", p + 1, q + 1);
            }
        }
    }
    let _ = writeln!(s, "{:.17e} 0 0 0 0", mi.nuclear_repulsion);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_energy_only() {
        let mi = parse_fcidump(" &FCI NORB=1, NELEC=0, MS2=0 &END\n 1.5 0 0 0 0\n".as_bytes()).unwrap();
        assert_eq!(mi.n_spatial, 1);
        assert_eq!(mi.nuclear_repulsion, 1.5);
        assert_eq!(mi.one_body[(0, 0)], 0.0);
        assert_eq!(mi.eri(0, 0, 0, 0), 0.0);
    }

    #[test]
    fn multiline_header_with_slash() {
        let text = "&FCI NORB=2,\n NELEC=2, MS2=0,\n ORBSYM=1,1,\n ISYM=1\n/\n0.5 2 1 1 1\n-1.0 1 1 0 0\n";
        let mi = parse_fcidump(text.as_bytes()).unwrap();
        assert_eq!(mi.n_electrons, 2);
        assert_eq!(mi.eri(1, 0, 0, 0), 0.5);
        assert_eq!(mi.eri(0, 0, 0, 1), 0.5);
        assert_eq!(mi.eri(0, 1, 0, 0), 0.5);
        assert_eq!(mi.eri(0, 0, 1, 0), 0.5);
        assert_eq!(mi.one_body[(0, 0)], -1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_fcidump("NORB=2\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(parse_fcidump("&FCI NELEC=2 &END\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_fcidump("&FCI NORB=1,NELEC=2 &END\n0.1 2 1 1 1\n".as_bytes()),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            parse_fcidump("&FCI NORB=1,NELEC=2 &END\nabc 1 1 1 1\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn fortran_exponent() {
        let mi = parse_fcidump("&FCI NORB=1,NELEC=1 &END\n1.0D-01 1 1 0 0\n".as_bytes()).unwrap();
        assert!((mi.one_body[(0, 0)] - 0.1).abs() < 1e-15);
    }
}
