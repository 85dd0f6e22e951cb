use super::{RadialError, RadialGrid};
use crate::phase_flow::DomainSpec;
use num_complex::Complex64 as C64;
use std::fmt::Write as _;
use std::io::{Read, Write};

pub const FIELD_MAGIC: [u8; 4] = *b"CWMF";
pub const FIELD_VERSION: u32 = 1;

/// Stored time levels of one mode on its radial grid. Arrays are row-major
/// with one row of `grid.len()` entries per level.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub n: u32,
    /// Real part of `b`; the measure is `r^{n−1} dr`.
    pub b: f64,
    pub j: u32,
    /// Substitution exponent used during the run.
    pub gamma: f64,
    pub grid: RadialGrid,
    pub times: Vec<f64>,
    /// `λ_j² = j(j+n−2)/c(t)²` per level.
    pub lambda_sq: Vec<f64>,
    pub values: Vec<C64>,
    pub velocity: Vec<C64>,
    pub source: Vec<C64>,
    pub domain: DomainSpec,
    pub dt: f64,
    pub cfl_number: f64,
    pub steps: usize,
}

impl ModeField {
    pub fn zeros(n: u32, j: u32, grid: RadialGrid, times: Vec<f64>, lambda_sq: Vec<f64>, domain: DomainSpec) -> Self {
        let size = grid.len() * times.len();
        Self {
            n,
            b: 0.0,
            j,
            gamma: 0.0,
            grid,
            times,
            lambda_sq,
            values: vec![C64::new(0.0, 0.0); size],
            velocity: vec![C64::new(0.0, 0.0); size],
            source: vec![C64::new(0.0, 0.0); size],
            domain,
            dt: 0.0,
            cfl_number: 0.0,
            steps: 0,
        }
    }

    /// A field sampled from `u(t, r)`; `u_t` is taken from `ut`.
    pub fn from_fn(
        n: u32,
        j: u32,
        grid: RadialGrid,
        times: Vec<f64>,
        domain: DomainSpec,
        u: impl Fn(f64, f64) -> C64,
        ut: impl Fn(f64, f64) -> C64,
    ) -> Self {
        let jf = j as f64;
        let lam = vec![jf * (jf + n as f64 - 2.0); times.len()];
        let mut f = Self::zeros(n, j, grid, times, lam, domain);
        let nr = f.grid.len();
        for (i, &t) in f.times.iter().enumerate() {
            for (k, &r) in f.grid.nodes.iter().enumerate() {
                f.values[i * nr + k] = u(t, r);
                f.velocity[i * nr + k] = ut(t, r);
            }
        }
        f
    }

    pub fn n_levels(&self) -> usize {
        self.times.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let nr = self.grid.len();
        &self.values[i * nr..(i + 1) * nr]
    }

    pub fn velocity_row(&self, i: usize) -> &[C64] {
        let nr = self.grid.len();
        &self.velocity[i * nr..(i + 1) * nr]
    }

    pub fn source_row(&self, i: usize) -> &[C64] {
        let nr = self.grid.len();
        &self.source[i * nr..(i + 1) * nr]
    }

    pub fn peak_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|v| *v == C64::new(0.0, 0.0))
    }

    /// The stored source samples as a field of their own.
    pub fn source_field(&self) -> ModeField {
        let mut f = self.clone();
        f.values = self.source.clone();
        f.velocity.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        f.source.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        f
    }

    /// Columns `t,r,re_u,im_u,re_ut,im_ut,re_f,im_f`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,r,re_u,im_u,re_ut,im_ut,re_f,im_f\n");
        let nr = self.grid.len();
        for (i, &t) in self.times.iter().enumerate() {
            for (k, &r) in self.grid.nodes.iter().enumerate() {
                let idx = i * nr + k;
                let (u, v, f) = (self.values[idx], self.velocity[idx], self.source[idx]);
                let _ = writeln!(s, "{t:e},{r:e},{:e},{:e},{:e},{:e},{:e},{:e}", u.re, u.im, v.re, v.im, f.re, f.im);
            }
        }
        s
    }

    /// Binary dump: magic `CWMF`, version, `n`, `j` (u32), node and level
    /// counts (u64), radii, times, then `u` as (re, im) pairs level by
    /// level; all little-endian, floats as f64.
    pub fn write_binary(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(&FIELD_MAGIC)?;
        for v in [FIELD_VERSION, self.n, self.j] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        w.write_all(&(self.times.len() as u64).to_le_bytes())?;
        for x in self.grid.nodes.iter().chain(&self.times) {
            w.write_all(&x.to_le_bytes())?;
        }
        for z in &self.values {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Contents of a binary field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub n: u32,
    pub j: u32,
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl FieldDump {
    pub fn read(r: &mut impl Read) -> Result<Self, RadialError> {
        let io = |e: std::io::Error| RadialError::Format(e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if magic != FIELD_MAGIC {
            return Err(RadialError::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut u32s = [0u32; 3];
        for v in &mut u32s {
            r.read_exact(&mut b4).map_err(io)?;
            *v = u32::from_le_bytes(b4);
        }
        if u32s[0] != FIELD_VERSION {
            return Err(RadialError::Format(format!("unsupported version {}", u32s[0])));
        }
        let mut b8 = [0u8; 8];
        let mut read_u64 = |r: &mut dyn Read| -> Result<u64, RadialError> {
            r.read_exact(&mut b8).map_err(io)?;
            Ok(u64::from_le_bytes(b8))
        };
        let nr = read_u64(r)? as usize;
        let nt = read_u64(r)? as usize;
        if nr.saturating_mul(nt) > 1 << 32 {
            return Err(RadialError::Format("implausible dimensions".into()));
        }
        let mut floats = |count: usize| -> Result<Vec<f64>, RadialError> {
            let mut out = Vec::with_capacity(count);
            let mut b = [0u8; 8];
            for _ in 0..count {
                r.read_exact(&mut b).map_err(io)?;
                out.push(f64::from_le_bytes(b));
            }
            Ok(out)
        };
        let radii = floats(nr)?;
        let times = floats(nt)?;
        let flat = floats(2 * nr * nt)?;
        let values = flat.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
        Ok(Self { n: u32s[1], j: u32s[2], radii, times, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_roundtrip() {
        let grid = RadialGrid::graded(0.01, 1.2, 0.2, 1.0).unwrap();
        let dom = DomainSpec::new(0.0, 1.0, 1.0, 2.0).unwrap();
        let f = ModeField::from_fn(3, 2, grid, vec![0.0, 0.5, 1.0], dom, |t, r| C64::new(t + r, t * r), |_, _| C64::new(0.0, 0.0));
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"CWMF");
        let d = FieldDump::read(&mut buf.as_slice()).unwrap();
        assert_eq!((d.n, d.j), (3, 2));
        assert_eq!(d.radii, f.grid.nodes);
        assert_eq!(d.times, f.times);
        assert_eq!(d.values, f.values);
        assert!(FieldDump::read(&mut &buf[..10]).is_err());
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let grid = RadialGrid::graded(0.1, 1.0, 0.5, 1.0).unwrap();
        let dom = DomainSpec::new(0.0, 1.0, 1.0, 2.0).unwrap();
        let f = ModeField::from_fn(3, 0, grid, vec![0.0, 1.0], dom, |_, _| C64::new(1.0, 0.0), |_, _| C64::new(0.0, 0.0));
        assert_eq!(f.to_csv().lines().count(), 1 + 2 * f.n_nodes());
    }
}
