//! VTK legacy ASCII unstructured grids restricted to tetrahedra.
//!
//! Written layout:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title>
//! ASCII
//! DATASET UNSTRUCTURED_GRID
//! POINTS n double
//! CELLS m 5m
//! CELL_TYPES m            (all 10)
//! POINT_DATA n
//! SCALARS role int 1      (0 inlet, 1 wall, 2 outlet, 3 interior)
//! LOOKUP_TABLE default
//! VECTORS <name> double   (zero or more, e.g. `velocity`)
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so positions
//! survive a save/load cycle bit for bit.

use std::fmt::Write as _;

use super::{Role, TetMesh};
use crate::field::VelocityField;
use crate::geom::Vec3;
use crate::{Error, Result};

const VTK_TETRA: i64 = 10;

/// A parsed mesh together with every `VECTORS` array found in the file.
#[derive(Clone, Debug)]
pub struct VtkContent {
    pub mesh: TetMesh,
    pub vectors: Vec<(String, Vec<Vec3>)>,
}

impl VtkContent {
    pub fn vector(&self, name: &str) -> Option<&[Vec3]> {
        self.vectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

pub fn save_mesh(mesh: &TetMesh, field: Option<&VelocityField>) -> Result<String> {
    match field {
        Some(f) => save_mesh_with_vectors(mesh, &[("velocity", &f.rows)]),
        None => save_mesh_with_vectors(mesh, &[]),
    }
}

/// Serializes `mesh` plus named per-vertex vector arrays.
pub fn save_mesh_with_vectors(mesh: &TetMesh, vectors: &[(&str, &[Vec3])]) -> Result<String> {
    let n = mesh.n_vertices();
    for (name, rows) in vectors {
        if rows.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "vector array `{name}` has {} rows for {n} vertices",
                rows.len()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Precondition(format!("invalid array name `{name}`")));
        }
    }
    let mut s = String::with_capacity(64 * n);
    s.push_str("# vtk DataFile Version 3.0\nequiflow tetrahedral mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.positions() {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let m = mesh.n_tets();
    let _ = writeln!(s, "CELLS {m} {}", 5 * m);
    for t in mesh.tets() {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(s, "{VTK_TETRA}");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    s.push_str("SCALARS role int 1\nLOOKUP_TABLE default\n");
    for r in mesh.roles() {
        let _ = writeln!(s, "{}", r.code());
    }
    for (name, rows) in vectors {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in rows.iter() {
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
    }
    Ok(s)
}

pub fn load_mesh(bytes: &[u8]) -> Result<TetMesh> {
    Ok(load_mesh_with_vectors(bytes)?.mesh)
}

pub fn load_mesh_with_vectors(bytes: &[u8]) -> Result<VtkContent> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "file is not valid UTF-8 text".into(),
    })?;
    Parser::new(text)?.parse()
}

struct Token<'a> {
    text: &'a str,
    line: usize,
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    last_line: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let header = lines.next().map(|(_, l)| l).unwrap_or("");
        if !header.starts_with("# vtk DataFile Version") {
            return Err(parse_err(1, "missing `# vtk DataFile Version` header"));
        }
        if lines.next().is_none() {
            return Err(parse_err(2, "missing title line"));
        }
        match lines.next() {
            Some((_, l)) if l.trim().eq_ignore_ascii_case("ASCII") => {}
            Some((n, l)) => return Err(parse_err(n, format!("expected ASCII, found `{}`", l.trim()))),
            None => return Err(parse_err(3, "missing ASCII line")),
        }
        let mut tokens = Vec::new();
        let mut last_line = 3;
        for (n, l) in lines {
            last_line = n;
            tokens.extend(l.split_whitespace().map(|text| Token { text, line: n }));
        }
        Ok(Self {
            tokens,
            pos: 0,
            last_line,
        })
    }

    fn next(&mut self, what: &str) -> Result<&Token<'a>> {
        let line = self.last_line;
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| parse_err(line, format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(tok)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn keyword(&mut self, kw: &str) -> Result<usize> {
        let tok = self.next(kw)?;
        if tok.text.eq_ignore_ascii_case(kw) {
            Ok(tok.line)
        } else {
            Err(parse_err(tok.line, format!("expected `{kw}`, found `{}`", tok.text)))
        }
    }

    fn usize(&mut self, what: &str) -> Result<(usize, usize)> {
        let tok = self.next(what)?;
        tok.text
            .parse()
            .map(|v| (v, tok.line))
            .map_err(|_| parse_err(tok.line, format!("expected {what}, found `{}`", tok.text)))
    }

    fn int(&mut self, what: &str) -> Result<(i64, usize)> {
        let tok = self.next(what)?;
        tok.text
            .parse()
            .map(|v| (v, tok.line))
            .map_err(|_| parse_err(tok.line, format!("expected {what}, found `{}`", tok.text)))
    }

    fn float(&mut self, what: &str) -> Result<f64> {
        let tok = self.next(what)?;
        tok.text
            .parse()
            .map_err(|_| parse_err(tok.line, format!("expected {what}, found `{}`", tok.text)))
    }

    fn word(&mut self, what: &str) -> Result<(String, usize)> {
        let tok = self.next(what)?;
        Ok((tok.text.to_string(), tok.line))
    }

    fn parse(mut self) -> Result<VtkContent> {
        self.keyword("DATASET")?;
        let (kind, line) = self.word("dataset type")?;
        if !kind.eq_ignore_ascii_case("UNSTRUCTURED_GRID") {
            return Err(parse_err(line, format!("unsupported dataset `{kind}`")));
        }

        self.keyword("POINTS")?;
        let (n, _) = self.usize("point count")?;
        let (ty, line) = self.word("point data type")?;
        if !matches!(ty.as_str(), "double" | "float") {
            return Err(parse_err(line, format!("unsupported point type `{ty}`")));
        }
        let mut positions = Vec::with_capacity(n);
        for _ in 0..n {
            positions.push([
                self.float("coordinate")?,
                self.float("coordinate")?,
                self.float("coordinate")?,
            ]);
        }

        self.keyword("CELLS")?;
        let (m, _) = self.usize("cell count")?;
        let (size, size_line) = self.usize("cell list size")?;
        let mut tets = Vec::with_capacity(m);
        let mut consumed = 0;
        for _ in 0..m {
            let (count, line) = self.usize("cell vertex count")?;
            if count != 4 {
                return Err(Error::CellType {
                    line,
                    found: format!("with {count} vertices"),
                });
            }
            let mut tet = [0usize; 4];
            for v in &mut tet {
                let (idx, line) = self.usize("vertex index")?;
                if idx >= n {
                    return Err(parse_err(
                        line,
                        format!("vertex index {idx} out of range [0, {n})"),
                    ));
                }
                *v = idx;
            }
            consumed += 5;
            tets.push(tet);
        }
        if consumed != size {
            return Err(parse_err(
                size_line,
                format!("CELLS size {size} does not match {consumed} listed entries"),
            ));
        }

        self.keyword("CELL_TYPES")?;
        let (mt, line) = self.usize("cell type count")?;
        if mt != m {
            return Err(parse_err(line, format!("{mt} cell types for {m} cells")));
        }
        for _ in 0..m {
            let (ty, line) = self.int("cell type")?;
            if ty != VTK_TETRA {
                return Err(Error::CellType {
                    line,
                    found: ty.to_string(),
                });
            }
        }

        let mut roles: Option<Vec<Role>> = None;
        let mut vectors = Vec::new();
        if self.peek().is_some() {
            self.keyword("POINT_DATA")?;
            let (np, line) = self.usize("point data count")?;
            if np != n {
                return Err(parse_err(line, format!("POINT_DATA {np} for {n} points")));
            }
            while let Some(tok) = self.peek() {
                let line = tok.line;
                let kw = tok.text.to_ascii_uppercase();
                self.pos += 1;
                match kw.as_str() {
                    "SCALARS" => {
                        let (name, _) = self.word("array name")?;
                        let (ty, ty_line) = self.word("array type")?;
                        if self.peek().is_some_and(|t| t.text.parse::<usize>().is_ok()) {
                            let (comps, l) = self.usize("component count")?;
                            if comps != 1 {
                                return Err(parse_err(l, "only single-component scalars are supported"));
                            }
                        }
                        if self.peek().is_some_and(|t| t.text.eq_ignore_ascii_case("LOOKUP_TABLE")) {
                            self.pos += 1;
                            self.word("lookup table name")?;
                        }
                        if name == "role" {
                            if !matches!(ty.as_str(), "int" | "long" | "short" | "char" | "unsigned_char") {
                                return Err(parse_err(ty_line, format!("role array must be integer, found `{ty}`")));
                            }
                            let mut r = Vec::with_capacity(n);
                            for _ in 0..n {
                                let (code, l) = self.int("role code")?;
                                r.push(Role::from_code(code).ok_or_else(|| {
                                    parse_err(l, format!("role code {code} outside 0..=3"))
                                })?);
                            }
                            roles = Some(r);
                        } else {
                            for _ in 0..n {
                                self.float("scalar value")?;
                            }
                        }
                    }
                    "VECTORS" => {
                        let (name, _) = self.word("array name")?;
                        self.word("array type")?;
                        let mut rows = Vec::with_capacity(n);
                        for _ in 0..n {
                            rows.push([
                                self.float("vector component")?,
                                self.float("vector component")?,
                                self.float("vector component")?,
                            ]);
                        }
                        vectors.push((name, rows));
                    }
                    other => {
                        return Err(parse_err(line, format!("unsupported section `{other}`")));
                    }
                }
            }
        }

        let roles = roles.ok_or_else(|| parse_err(self.last_line, "missing integer point-data array `role`"))?;
        let mesh = TetMesh::new(positions, tets, roles)?;
        Ok(VtkContent { mesh, vectors })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_vertex_mesh() -> TetMesh {
        TetMesh::new(
            vec![
                [0.1, 0.2, 0.3],
                [1.0 / 3.0, 0.0, -0.0],
                [0.0, 2.0f64.sqrt(), 0.0],
                [1e-17, 0.0, 1.0],
                [123456.789, -9.87654321e10, 5e-300],
            ],
            vec![[0, 1, 2, 3]],
            vec![Role::Inlet, Role::Wall, Role::Outlet, Role::Interior, Role::Interior],
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let mesh = five_vertex_mesh();
        let text = save_mesh(&mesh, None).unwrap();
        let back = load_mesh(text.as_bytes()).unwrap();
        for (a, b) in mesh.positions().iter().zip(back.positions()) {
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
        assert_eq!(back, mesh);
    }

    #[test]
    fn velocity_lines() {
        let mesh = TetMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 2, 3]],
            vec![Role::Inlet, Role::Wall, Role::Outlet, Role::Interior],
        )
        .unwrap();
        let field = VelocityField::new(vec![[1.0, 2.0, 3.0]; 4]);
        let text = save_mesh(&mesh, Some(&field)).unwrap();
        let after: Vec<&str> = text
            .lines()
            .skip_while(|l| !l.starts_with("VECTORS velocity"))
            .skip(1)
            .collect();
        assert_eq!(after, vec!["1 2 3"; 4]);

        let zero = save_mesh(&mesh, Some(&VelocityField::zeros(4))).unwrap();
        assert!(zero.ends_with("VECTORS velocity double\n0 0 0\n0 0 0\n0 0 0\n0 0 0\n"));

        let content = load_mesh_with_vectors(text.as_bytes()).unwrap();
        assert_eq!(content.vector("velocity").unwrap(), &field.rows[..]);
    }

    #[test]
    fn rejects_length_mismatch() {
        let mesh = five_vertex_mesh();
        assert!(matches!(
            save_mesh(&mesh, Some(&VelocityField::zeros(3))),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn rejects_triangle_cell() {
        let text = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 3 double\n0 0 0\n1 0 0\n0 1 0\nCELLS 1 4\n3 0 1 2\nCELL_TYPES 1\n5\n";
        match load_mesh(text.as_bytes()) {
            Err(Error::CellType { line, .. }) => assert_eq!(line, 10),
            other => panic!("expected cell-type error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_cell_type_code() {
        let text = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 4 double\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nCELLS 1 5\n4 0 1 2 3\nCELL_TYPES 1\n9\nPOINT_DATA 4\nSCALARS role int 1\nLOOKUP_TABLE default\n0\n1\n2\n3\n";
        assert!(matches!(load_mesh(text.as_bytes()), Err(Error::CellType { line: 13, .. })));
    }

    #[test]
    fn missing_role_and_bad_index() {
        let no_role = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 4 double\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nCELLS 1 5\n4 0 1 2 3\nCELL_TYPES 1\n10\n";
        let err = load_mesh(no_role.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("role"), "{err}");

        let bad_index = no_role.replace("4 0 1 2 3", "4 0 1 2 7");
        match load_mesh(bad_index.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 11);
                assert!(message.contains("out of range"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_number_names_line() {
        let mesh = five_vertex_mesh();
        let text = save_mesh(&mesh, None).unwrap().replacen("0.1 0.2 0.3", "0.1 zz 0.3", 1);
        match load_mesh(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }
}
