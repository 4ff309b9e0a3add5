use super::SystemSpec;
use crate::error::{Error, Result};

/// A discrete-time map over full states, with an observed/unobserved split.
///
/// `SystemSpec` is the production implementation; the oracle is written
/// against this trait so it can also be exercised on toy maps.
pub trait FlowMap: Sync {
    fn state_dim(&self) -> usize;

    fn observed(&self) -> &[usize];

    fn unobserved(&self) -> Vec<usize> {
        (0..self.state_dim())
            .filter(|i| !self.observed().contains(i))
            .collect()
    }

    /// Advance `z` by one sample in place.
    fn advance(&self, z: &mut [f64]) -> Result<()>;

    /// Advance `z` by one sample and write the row-major Jacobian of that
    /// step into `jac` (length `state_dim()^2`).
    fn advance_with_jacobian(&self, z: &mut [f64], jac: &mut [f64]) -> Result<()>;
}

impl FlowMap for SystemSpec {
    fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    fn observed(&self) -> &[usize] {
        &self.observed
    }

    fn advance(&self, z: &mut [f64]) -> Result<()> {
        let m = z.len();
        if self.system.is_discrete() {
            let mut out = [0.0; 2];
            self.system.lv_map_into(z, &mut out);
            z.copy_from_slice(&out);
        } else {
            let h = self.sample_dt / self.substeps as f64;
            let mut k = Rk4Scratch::new(m);
            for _ in 0..self.substeps {
                k.step(self, z, h);
            }
        }
        check_finite(z)
    }

    fn advance_with_jacobian(&self, z: &mut [f64], jac: &mut [f64]) -> Result<()> {
        let m = z.len();
        if self.system.is_discrete() {
            self.system.lv_jacobian_into(z, jac);
            let mut out = [0.0; 2];
            self.system.lv_map_into(z, &mut out);
            z.copy_from_slice(&out);
        } else {
            identity_into(jac, m);
            let h = self.sample_dt / self.substeps as f64;
            let mut k = Rk4Scratch::new(m);
            let mut v = VariationalScratch::new(m);
            for _ in 0..self.substeps {
                k.step_variational(self, z, jac, h, &mut v);
            }
        }
        check_finite(z)?;
        check_finite(jac)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { sample: 0 })
    }
}

pub(crate) fn identity_into(out: &mut [f64], m: usize) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..m {
        out[i * m + i] = 1.0;
    }
}

/// `out = a * b` for row-major m×m matrices.
fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize) {
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for l in 0..m {
                acc += a[i * m + l] * b[l * m + j];
            }
            out[i * m + j] = acc;
        }
    }
}

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    // Stage points are needed again for the variational update.
    z2: Vec<f64>,
    z3: Vec<f64>,
    z4: Vec<f64>,
}

struct VariationalScratch {
    a: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl VariationalScratch {
    fn new(m: usize) -> Self {
        let z = || vec![0.0; m * m];
        VariationalScratch {
            a: z(),
            k1: z(),
            k2: z(),
            k3: z(),
            k4: z(),
            tmp: z(),
        }
    }
}

impl Rk4Scratch {
    fn new(m: usize) -> Self {
        let z = || vec![0.0; m];
        Rk4Scratch {
            k1: z(),
            k2: z(),
            k3: z(),
            k4: z(),
            z2: z(),
            z3: z(),
            z4: z(),
        }
    }

    fn stages(&mut self, spec: &SystemSpec, z: &[f64], h: f64) {
        let sys = &spec.system;
        sys.field_into(z, &mut self.k1);
        for i in 0..z.len() {
            self.z2[i] = z[i] + 0.5 * h * self.k1[i];
        }
        sys.field_into(&self.z2, &mut self.k2);
        for i in 0..z.len() {
            self.z3[i] = z[i] + 0.5 * h * self.k2[i];
        }
        sys.field_into(&self.z3, &mut self.k3);
        for i in 0..z.len() {
            self.z4[i] = z[i] + h * self.k3[i];
        }
        sys.field_into(&self.z4, &mut self.k4);
    }

    fn step(&mut self, spec: &SystemSpec, z: &mut [f64], h: f64) {
        self.stages(spec, z, h);
        for i in 0..z.len() {
            z[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// One RK4 step of the state and of its exact derivative.
    fn step_variational(
        &mut self,
        spec: &SystemSpec,
        z: &mut [f64],
        jac: &mut [f64],
        h: f64,
        v: &mut VariationalScratch,
    ) {
        let m = z.len();
        let sys = &spec.system;
        self.stages(spec, z, h);

        // K1 = A(z) J
        sys.field_jacobian_into(z, &mut v.a);
        matmul_into(&v.a, jac, &mut v.k1, m);
        // K2 = A(z2) (J + h/2 K1)
        for i in 0..m * m {
            v.tmp[i] = jac[i] + 0.5 * h * v.k1[i];
        }
        sys.field_jacobian_into(&self.z2, &mut v.a);
        matmul_into(&v.a, &v.tmp, &mut v.k2, m);
        // K3 = A(z3) (J + h/2 K2)
        for i in 0..m * m {
            v.tmp[i] = jac[i] + 0.5 * h * v.k2[i];
        }
        sys.field_jacobian_into(&self.z3, &mut v.a);
        matmul_into(&v.a, &v.tmp, &mut v.k3, m);
        // K4 = A(z4) (J + h K3)
        for i in 0..m * m {
            v.tmp[i] = jac[i] + h * v.k3[i];
        }
        sys.field_jacobian_into(&self.z4, &mut v.a);
        matmul_into(&v.a, &v.tmp, &mut v.k4, m);

        for i in 0..m * m {
            jac[i] += h / 6.0 * (v.k1[i] + 2.0 * v.k2[i] + 2.0 * v.k3[i] + v.k4[i]);
        }
        for i in 0..m {
            z[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}
