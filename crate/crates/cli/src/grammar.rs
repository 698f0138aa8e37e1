//! The small languages accepted on the command line.
//!
//! Numbers: `0.25`, `1e-3` or a fraction `1/64`.
//!
//! Profiles `ν`: `<v>`, `const:<v>` or `table:<path>` (two-column CSV,
//! piecewise linear).
//!
//! Tensors: `identity`, `spiral`, `radial:<ν>`, `horizontal:<ν>` (the
//! volume-preserving families generated by a profile), `const:<a11>,<a12>,<a22>`
//! and `mu:<re>,<im>` (constant tensors).
//!
//! Boundary data: `lb-disk`, `lb-punctured-disk`, `re`, `im`, `zero`, `const:<v>`.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use qcfactor::exact::{lb_disk_field, lb_punctured_disk_field};
use qcfactor::{
    tensor_from_mu, Coefficient, ConductivityTensor, DilatationField, FnField, SharedField, Sign, TensorEntries,
};

pub fn real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let x = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            let d: f64 = d.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            n / d
        }
        None => s.parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

pub fn reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(real).collect()
}

fn exactly<const N: usize>(s: &str, what: &str) -> Result<[f64; N], String> {
    let v = reals(s)?;
    v.try_into().map_err(|_| format!("{what}: expected {N} comma-separated numbers, got `{s}`"))
}

pub fn profile(s: &str) -> Result<Coefficient, String> {
    match s.split_once(':') {
        Some(("const", v)) => Ok(Coefficient::real_constant(real(v)?)),
        Some(("table", path)) => Coefficient::from_table_file(Path::new(path)).map_err(|e| e.to_string()),
        None => Ok(Coefficient::real_constant(real(s)?)),
        _ => Err(format!("unknown profile `{s}` (expected <v>, const:<v> or table:<path>)")),
    }
}

pub fn tensor(s: &str) -> Result<ConductivityTensor, String> {
    let err = |e: qcfactor::Error| format!("tensor `{s}`: {e}");
    match s.split_once(':') {
        None if s == "identity" => Ok(ConductivityTensor::identity()),
        None if s == "spiral" => Ok(ConductivityTensor::log_spiral()),
        Some(("radial", nu)) => Ok(labelled(
            ConductivityTensor::from_dilatation(
                DilatationField::radial_volume_preserving(&profile(nu)?, Sign::Minus).map_err(err)?,
            ),
            s,
        )),
        Some(("horizontal", nu)) => Ok(labelled(
            ConductivityTensor::from_dilatation(
                DilatationField::horizontal_volume_preserving(&profile(nu)?, Sign::Plus).map_err(err)?,
            ),
            s,
        )),
        Some(("const", v)) => {
            let [a11, a12, a22] = exactly::<3>(v, "const")?;
            ConductivityTensor::constant(TensorEntries::new(a11, a12, a22)).map_err(err)
        }
        Some(("mu", v)) => {
            let [re, im] = exactly::<2>(v, "mu")?;
            let entries = tensor_from_mu(Complex64::new(re, im)).map_err(err)?;
            ConductivityTensor::constant(entries).map_err(err)
        }
        _ => Err(format!(
            "unknown tensor `{s}` (expected identity, spiral, radial:<nu>, horizontal:<nu>, const:<a11>,<a12>,<a22> or mu:<re>,<im>)"
        )),
    }
}

/// Rebuild with the command-line spelling as label.
fn labelled(t: ConductivityTensor, label: &str) -> ConductivityTensor {
    let inner = t.clone();
    let field = t.dilatation().cloned();
    let out = ConductivityTensor::from_fn(label, move |z| inner.raw(z));
    match field {
        Some(f) => out.with_dilatation(f),
        None => out,
    }
}

/// Boundary data and whether it is itself an exact solution with `f`.
pub struct Boundary {
    pub field: SharedField,
    /// Nonlinearity name for which `field` solves the isotropic equation.
    pub solves: Option<&'static str>,
    /// Whether `field` is radial, so it also solves the radial families.
    pub radial: bool,
}

pub fn boundary(s: &str) -> Result<Boundary, String> {
    let b = |field: SharedField, solves, radial| Boundary { field, solves, radial };
    match s.split_once(':') {
        None => match s {
            "lb-disk" => Ok(b(lb_disk_field(), Some("exp"), true)),
            "lb-punctured-disk" => Ok(b(lb_punctured_disk_field(), Some("exp"), true)),
            "re" => Ok(b(Arc::new(FnField::total("re", |z| z.re).with_gradient(|_| Ok([1.0, 0.0]))), Some("zero"), false)),
            "im" => Ok(b(Arc::new(FnField::total("im", |z| z.im).with_gradient(|_| Ok([0.0, 1.0]))), Some("zero"), false)),
            "zero" => Ok(b(FnField::constant(0.0).into_shared(), Some("zero"), true)),
            _ => Err(format!("unknown boundary data `{s}`")),
        },
        Some(("const", v)) => Ok(b(FnField::constant(real(v)?).into_shared(), Some("zero"), true)),
        _ => Err(format!("unknown boundary data `{s}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_lists() {
        assert_eq!(real("1/64").unwrap(), 0.015625);
        assert_eq!(reals("1/64,1/128,0.5").unwrap(), vec![0.015625, 0.0078125, 0.5]);
        assert!(real("1/0").is_err());
        assert!(real("abc").is_err());
    }

    #[test]
    fn tensor_grammar() {
        let z = Complex64::new(0.3, 0.2);
        let a = tensor("const:1,-2,5").unwrap().at(z).unwrap();
        assert_eq!((a.a11, a.a12, a.a22), (1.0, -2.0, 5.0));
        let b = tensor("mu:0.5,0.5").unwrap().at(z).unwrap();
        assert!(b.max_abs_diff(&a) < 1e-14);
        let r = tensor("radial:0.7071").unwrap();
        assert_eq!(r.label(), "radial:0.7071");
        assert!((r.at(z).unwrap().det() - 1.0).abs() < 1e-12);
        assert!(tensor("radial:const:0.3").is_ok());
        assert!(tensor("horizontal:1/2").is_ok());
        assert!(tensor("const:1,0,2").is_err());
        assert!(tensor("mu:1,0").is_err());
        assert!(tensor("radial:1.5").is_err());
        assert!(tensor("elliptic").is_err());
    }

    #[test]
    fn boundary_grammar() {
        let z = Complex64::new(0.25, -0.5);
        assert_eq!(boundary("re").unwrap().field.eval(z).unwrap(), 0.25);
        assert_eq!(boundary("const:2").unwrap().field.eval(z).unwrap(), 2.0);
        assert_eq!(boundary("lb-disk").unwrap().solves, Some("exp"));
        assert!(boundary("sin").is_err());
    }
}
