//! C ABI over the `qevent` library.
//!
//! Objects are opaque heap handles created by `qev_*_new` and released by the matching
//! `qev_*_free`. Every fallible call returns a [`QevStatus`]; on failure the message is
//! available from [`qev_last_error_message`] on the same thread until the next failing call.
//! Vectors are passed as `dim` contiguous doubles, matrices row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use qevent::linalg::Mat;
use qevent::minkowski::MAX_DIM;
use qevent::poincare::{apply, PoincareElement};
use qevent::{FourVector, GaussianEventPacket, Propagator, QevError, QuadratureScheme, ShellQuadrature, ShellSelector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QevStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    UnitMismatch = 4,
    ZeroNorm = 5,
    PhysicallyDisallowed = 6,
    QuadratureFailure = 7,
    GridError = 8,
    StabilityViolation = 9,
    AllCandidatesDisallowed = 10,
    IoError = 11,
    Panic = 12,
}

/// Which mass-shell branches a propagator integrates over.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QevShellSelector {
    Both = 0,
    PositiveOnly = 1,
    NegativeOnly = 2,
}

pub struct QevPacket(GaussianEventPacket);
pub struct QevPropagator(Propagator);
pub struct QevQuadrature(ShellQuadrature);
pub struct QevPoincare(PoincareElement);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &QevError) -> QevStatus {
    match e {
        QevError::DimensionMismatch { .. } => QevStatus::DimensionMismatch,
        QevError::UnitMismatch { .. } => QevStatus::UnitMismatch,
        QevError::InvalidParameter(_) => QevStatus::InvalidArgument,
        QevError::ZeroNorm => QevStatus::ZeroNorm,
        QevError::PhysicallyDisallowed { .. } => QevStatus::PhysicallyDisallowed,
        QevError::QuadratureFailure(_) => QevStatus::QuadratureFailure,
        QevError::GridTooSmall { .. } | QevError::GridMismatch(_) => QevStatus::GridError,
        QevError::StabilityViolation(_) => QevStatus::StabilityViolation,
        QevError::AllCandidatesDisallowed { .. } => QevStatus::AllCandidatesDisallowed,
        QevError::Io(_) | QevError::Format(_) => QevStatus::IoError,
    }
}

enum Failure {
    Null(&'static str),
    Lib(QevError),
}

impl From<QevError> for Failure {
    fn from(e: QevError) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status plus the thread's last error message.
fn guard<F>(f: F) -> QevStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QevStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            QevStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            let status = status_of(&e);
            set_last_error(e.to_string());
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            QevStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn four_vector(p: *const f64, dim: usize, what: &'static str) -> Result<FourVector, Failure> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(QevError::InvalidParameter(format!("dimension {dim} outside 2..={MAX_DIM}")).into());
    }
    Ok(FourVector::natural(slice(p, dim, what)?)?)
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL if none failed. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn qev_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a packet with `dim` = D spacetime components and diagonal momentum widths.
///
/// # Safety
/// `x`, `p` and `widths` must point to `dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_new(
    dim: usize,
    x: *const f64,
    p: *const f64,
    widths: *const f64,
    amplitude_re: f64,
    amplitude_im: f64,
    out: *mut *mut QevPacket,
) -> QevStatus {
    guard(|| {
        let x = four_vector(x, dim, "x")?;
        let p = four_vector(p, dim, "p")?;
        let w = slice(widths, dim, "widths")?;
        let packet = GaussianEventPacket::new(x, p, w, Complex64::new(amplitude_re, amplitude_im))?;
        write(out, boxed(QevPacket(packet)), "out")
    })
}

/// Creates a packet from a full momentum-space precision matrix (`dim`×`dim`, row-major, SPD).
///
/// # Safety
/// `x` and `p` must point to `dim` doubles, `precision` to `dim`² doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_new_with_precision(
    dim: usize,
    x: *const f64,
    p: *const f64,
    precision: *const f64,
    amplitude_re: f64,
    amplitude_im: f64,
    out: *mut *mut QevPacket,
) -> QevStatus {
    guard(|| {
        let x = four_vector(x, dim, "x")?;
        let p = four_vector(p, dim, "p")?;
        let k = slice(precision, dim * dim, "precision")?;
        let mut m: Mat = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            m[i][..dim].copy_from_slice(&k[i * dim..(i + 1) * dim]);
        }
        let packet = GaussianEventPacket::with_precision(x, p, m, Complex64::new(amplitude_re, amplitude_im))?;
        write(out, boxed(QevPacket(packet)), "out")
    })
}

/// # Safety
/// `packet` must be NULL or a handle from a `qev_packet_*` constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_free(packet: *mut QevPacket) {
    if !packet.is_null() {
        drop(Box::from_raw(packet));
    }
}

/// Spacetime dimension D of the packet, 0 for NULL.
///
/// # Safety
/// `packet` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_dim(packet: *const QevPacket) -> usize {
    packet.as_ref().map_or(0, |p| p.0.dim())
}

/// Copies the spacetime and momentum centres into `x_out` and `p_out` (D doubles each).
///
/// # Safety
/// `packet` must be a live handle; `x_out` and `p_out` must hold D writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_centers(packet: *const QevPacket, x_out: *mut f64, p_out: *mut f64) -> QevStatus {
    guard(|| {
        let p = &handle(packet, "packet")?.0;
        if x_out.is_null() || p_out.is_null() {
            return Err(Failure::Null("x_out / p_out"));
        }
        let d = p.dim();
        ptr::copy_nonoverlapping(p.center_x().as_slice().as_ptr(), x_out, d);
        ptr::copy_nonoverlapping(p.center_p().as_slice().as_ptr(), p_out, d);
        Ok(())
    })
}

/// ⟨ψ|ψ⟩.
///
/// # Safety
/// `packet` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_norm_sq(packet: *const QevPacket, out: *mut f64) -> QevStatus {
    guard(|| write(out, handle(packet, "packet")?.0.norm_sq(), "out"))
}

/// e^{i b·x} ψ(x), i.e. ψ(p + b) in momentum space. Pairs with a propagator whose potential is shifted by −b.
///
/// # Safety
/// `packet` must be a live handle, `b` must point to D doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_gauge_shift(
    packet: *const QevPacket,
    b: *const f64,
    out: *mut *mut QevPacket,
) -> QevStatus {
    guard(|| {
        let p = &handle(packet, "packet")?.0;
        let b = four_vector(b, p.dim(), "b")?;
        write(out, boxed(QevPacket(p.gauge_shift(&b)?)), "out")
    })
}

/// ⟨φ|ψ⟩ on the full momentum space.
///
/// # Safety
/// `phi` and `psi` must be live handles; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_inner_product(
    phi: *const QevPacket,
    psi: *const QevPacket,
    re: *mut f64,
    im: *mut f64,
) -> QevStatus {
    guard(|| {
        let v = qevent::inner_product(&handle(phi, "phi")?.0, &handle(psi, "psi")?.0)?;
        write(re, v.re, "re")?;
        write(im, v.im, "im")
    })
}

/// x·y with signature (+,−,−,−).
///
/// # Safety
/// `x` and `y` must point to `dim` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_minkowski_dot(dim: usize, x: *const f64, y: *const f64, out: *mut f64) -> QevStatus {
    guard(|| {
        let v = qevent::minkowski_dot(&four_vector(x, dim, "x")?, &four_vector(y, dim, "y")?)?;
        write(out, v, "out")
    })
}

/// Propagator of mass `mass` in a constant potential (`potential` may be NULL for zero).
///
/// # Safety
/// `potential` must be NULL or point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_propagator_new(
    dim: usize,
    mass: f64,
    potential: *const f64,
    selector: QevShellSelector,
    charge_sign: i32,
    out: *mut *mut QevPropagator,
) -> QevStatus {
    guard(|| {
        let a = if potential.is_null() {
            FourVector::natural(&vec![0.0; dim])?
        } else {
            four_vector(potential, dim, "potential")?
        };
        let selector = match selector {
            QevShellSelector::Both => ShellSelector::Both,
            QevShellSelector::PositiveOnly => ShellSelector::PositiveOnly,
            QevShellSelector::NegativeOnly => ShellSelector::NegativeOnly,
        };
        let g = Propagator::new(mass, a, selector, charge_sign)?;
        write(out, boxed(QevPropagator(g)), "out")
    })
}

/// # Safety
/// `g` must be NULL or a live propagator handle.
#[no_mangle]
pub unsafe extern "C" fn qev_propagator_free(g: *mut QevPropagator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Default adaptive Gauss–Legendre rule for `dim_space` = D − 1 spatial dimensions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_quadrature_new(dim_space: usize, out: *mut *mut QevQuadrature) -> QevStatus {
    guard(|| {
        if !(1..MAX_DIM).contains(&dim_space) {
            let msg = format!("spatial dimension {dim_space} outside 1..={}", MAX_DIM - 1);
            return Err(QevError::InvalidParameter(msg).into());
        }
        write(out, boxed(QevQuadrature(ShellQuadrature::default_for(dim_space))), "out")
    })
}

/// Adaptive Gauss–Legendre rule starting at `nodes_per_axis` and refining up to `max_nodes_per_axis`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_quadrature_gauss_legendre(
    nodes_per_axis: usize,
    max_nodes_per_axis: usize,
    tolerance: f64,
    truncation_sigmas: f64,
    out: *mut *mut QevQuadrature,
) -> QevStatus {
    guard(|| {
        let q = ShellQuadrature {
            scheme: QuadratureScheme::GaussLegendre { nodes_per_axis },
            truncation_sigmas,
            tolerance,
            max_nodes_per_axis,
        };
        q.validate()?;
        write(out, boxed(QevQuadrature(q)), "out")
    })
}

/// Seeded Monte Carlo rule with `samples` draws.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qev_quadrature_monte_carlo(
    samples: usize,
    seed: u64,
    out: *mut *mut QevQuadrature,
) -> QevStatus {
    guard(|| {
        let q = ShellQuadrature::monte_carlo(samples, seed);
        q.validate()?;
        write(out, boxed(QevQuadrature(q)), "out")
    })
}

/// # Safety
/// `q` must be NULL or a live quadrature handle.
#[no_mangle]
pub unsafe extern "C" fn qev_quadrature_free(q: *mut QevQuadrature) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// τ(φ, ψ) = ⟨φ|Ĝ|ψ⟩.
///
/// # Safety
/// All handles must be live; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_transition_amplitude(
    phi: *const QevPacket,
    psi: *const QevPacket,
    g: *const QevPropagator,
    q: *const QevQuadrature,
    re: *mut f64,
    im: *mut f64,
) -> QevStatus {
    guard(|| {
        let tau = qevent::transition_amplitude(
            &handle(phi, "phi")?.0,
            &handle(psi, "psi")?.0,
            &handle(g, "propagator")?.0,
            &handle(q, "quadrature")?.0,
        )?;
        write(re, tau.re, "re")?;
        write(im, tau.im, "im")
    })
}

/// P(φ, ψ) = |τ(φ,ψ)|² / (τ(φ,φ) τ(ψ,ψ)).
///
/// # Safety
/// All handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_transition_probability(
    phi: *const QevPacket,
    psi: *const QevPacket,
    g: *const QevPropagator,
    q: *const QevQuadrature,
    out: *mut f64,
) -> QevStatus {
    guard(|| {
        let p = qevent::transition_probability(
            &handle(phi, "phi")?.0,
            &handle(psi, "psi")?.0,
            &handle(g, "propagator")?.0,
            &handle(q, "quadrature")?.0,
        )?;
        write(out, p, "out")
    })
}

/// Whether τ(ψ,ψ)/⟨ψ|ψ⟩ exceeds `threshold`.
///
/// # Safety
/// All handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_is_physically_allowed(
    psi: *const QevPacket,
    g: *const QevPropagator,
    q: *const QevQuadrature,
    threshold: f64,
    out: *mut bool,
) -> QevStatus {
    guard(|| {
        let ok = qevent::is_physically_allowed(
            &handle(psi, "psi")?.0,
            &handle(g, "propagator")?.0,
            &handle(q, "quadrature")?.0,
            threshold,
        )?;
        write(out, ok, "out")
    })
}

/// General element x ↦ Λx + a. `lorentz` is `dim`×`dim` row-major.
///
/// # Safety
/// `lorentz` must point to `dim`² doubles, `translation` to `dim` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_poincare_new(
    dim: usize,
    lorentz: *const f64,
    translation: *const f64,
    parity: bool,
    time_reversal: bool,
    out: *mut *mut QevPoincare,
) -> QevStatus {
    guard(|| {
        let a = four_vector(translation, dim, "translation")?;
        let l = slice(lorentz, dim * dim, "lorentz")?;
        let mut m: Mat = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            m[i][..dim].copy_from_slice(&l[i * dim..(i + 1) * dim]);
        }
        write(out, boxed(QevPoincare(PoincareElement::new(m, a, parity, time_reversal)?)), "out")
    })
}

/// Pure boost with rapidity vector of `dim_space` components.
///
/// # Safety
/// `rapidity` must point to `dim_space` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_poincare_boost(
    dim_space: usize,
    rapidity: *const f64,
    out: *mut *mut QevPoincare,
) -> QevStatus {
    guard(|| {
        let theta = slice(rapidity, dim_space, "rapidity")?;
        write(out, boxed(QevPoincare(PoincareElement::boost(theta)?)), "out")
    })
}

/// Pure translation by `a`.
///
/// # Safety
/// `a` must point to `dim` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_poincare_translation(dim: usize, a: *const f64, out: *mut *mut QevPoincare) -> QevStatus {
    guard(|| write(out, boxed(QevPoincare(PoincareElement::translation(four_vector(a, dim, "a")?))), "out"))
}

/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qev_poincare_free(g: *mut QevPoincare) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// The transformed packet U(g)ψ as a new handle.
///
/// # Safety
/// `g` and `packet` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qev_packet_apply_poincare(
    g: *const QevPoincare,
    packet: *const QevPacket,
    out: *mut *mut QevPacket,
) -> QevStatus {
    guard(|| {
        let moved = apply(&handle(g, "poincare")?.0, &handle(packet, "packet")?.0)?;
        write(out, boxed(QevPacket(moved)), "out")
    })
}
