//! Singular values of an upper bidiagonal matrix by implicit QR iteration
//! with Demmel-Kahan zero-shift sweeps and relative-accuracy deflation
//! (after LAPACK `dbdsqr`, values only).

use super::OracleError;
use crate::band_store::BidiagonalResult;
use crate::scalar::Scalar;

/// Plane rotation `(c, s, r)` with `c f + s g = r`, `-s f + c g = 0`.
fn rotg(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        (1.0, 0.0, f)
    } else if f == 0.0 {
        (0.0, 1.0, g)
    } else {
        let r = f.hypot(g);
        (f / r, g / r, r)
    }
}

/// Singular values `(min, max)` of `[[f, g], [0, h]]`.
fn las2(f: f64, g: f64, h: f64) -> (f64, f64) {
    let (fa, ga, ha) = (f.abs(), g.abs(), h.abs());
    let (fhmn, fhmx) = (fa.min(ha), fa.max(ha));
    if fhmn == 0.0 {
        let smax = if fhmx == 0.0 {
            ga
        } else {
            let (lo, hi) = (fhmx.min(ga), fhmx.max(ga));
            hi * (1.0 + (lo / hi).powi(2)).sqrt()
        };
        return (0.0, smax);
    }
    if ga < fhmx {
        let as_ = 1.0 + fhmn / fhmx;
        let at = (fhmx - fhmn) / fhmx;
        let au = (ga / fhmx).powi(2);
        let c = 2.0 / ((as_ * as_ + au).sqrt() + (at * at + au).sqrt());
        (fhmn * c, fhmx / c)
    } else {
        let au = fhmx / ga;
        if au == 0.0 {
            (fhmn * fhmx / ga, ga)
        } else {
            let as_ = 1.0 + fhmn / fhmx;
            let at = (fhmx - fhmn) / fhmx;
            let c = 1.0 / ((1.0 + (as_ * au).powi(2)).sqrt() + (1.0 + (at * au).powi(2)).sqrt());
            (2.0 * fhmn * c * au, ga / (c + c))
        }
    }
}

/// Singular values of `b` in descending order, computed in `f64`.
pub fn bidiagonal_svd<T: Scalar>(b: &BidiagonalResult<T>) -> Result<Vec<f64>, OracleError> {
    let n = b.d.len();
    if n > 1 && b.e.len() != n - 1 {
        return Err(OracleError::LengthMismatch {
            expected: n - 1,
            found: b.e.len(),
        });
    }
    let mut d: Vec<f64> = b.d.iter().map(|v| v.to_f64()).collect();
    let mut e: Vec<f64> = b.e.iter().map(|v| v.to_f64()).collect();
    if n > 1 {
        qr_sweeps(&mut d, &mut e)?;
    }
    for v in &mut d {
        *v = v.abs();
    }
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

fn qr_sweeps(d: &mut [f64], e: &mut [f64]) -> Result<(), OracleError> {
    let n = d.len();
    let eps = f64::EPSILON / 2.0;
    let unfl = f64::MIN_POSITIVE;
    let tol = 10f64.max(100f64.min(eps.powf(-0.125))) * eps;
    let max_sweeps = 30 * n * n;

    // lower bound on the smallest singular value, for the absolute threshold
    let mut sminoa = d[0].abs();
    let mut mu = sminoa;
    for i in 1..n {
        if sminoa == 0.0 {
            break;
        }
        mu = d[i].abs() * (mu / (mu + e[i - 1].abs()));
        sminoa = sminoa.min(mu);
    }
    sminoa /= (n as f64).sqrt();
    let thresh = (tol * sminoa).max(6.0 * n as f64 * (n as f64 * unfl));

    let mut sweeps = 0usize;
    let (mut oldll, mut oldm) = (usize::MAX, usize::MAX);
    let mut forward = true;
    // active block is d[ll..=m]
    let mut m = n - 1;
    'outer: while m > 0 {
        if sweeps > max_sweeps {
            return Err(OracleError::NoConvergence { sweeps });
        }
        let mut smax = d[m].abs();
        let mut ll = None;
        for l in (0..m).rev() {
            if e[l].abs() <= thresh {
                ll = Some(l);
                break;
            }
            smax = smax.max(d[l].abs()).max(e[l].abs());
        }
        let ll = match ll {
            Some(l) => {
                e[l] = 0.0;
                if l == m - 1 {
                    m -= 1;
                    continue;
                }
                l + 1
            }
            None => 0,
        };
        if ll == m - 1 {
            let (smin, smx) = las2(d[m - 1], e[m - 1], d[m]);
            d[m - 1] = smx;
            e[m - 1] = 0.0;
            d[m] = smin;
            if m < 2 {
                break;
            }
            m -= 2;
            continue;
        }
        if ll > oldm || m < oldll || oldll == usize::MAX {
            forward = d[ll].abs() >= d[m].abs();
        }

        // convergence tests
        let sminl;
        if forward {
            if e[m - 1].abs() <= tol * d[m].abs() {
                e[m - 1] = 0.0;
                continue;
            }
            let mut mu = d[ll].abs();
            let mut s = mu;
            for l in ll..m {
                if e[l].abs() <= tol * mu {
                    e[l] = 0.0;
                    continue 'outer;
                }
                mu = d[l + 1].abs() * (mu / (mu + e[l].abs()));
                s = s.min(mu);
            }
            sminl = s;
        } else {
            if e[ll].abs() <= tol * d[ll].abs() {
                e[ll] = 0.0;
                continue;
            }
            let mut mu = d[m].abs();
            let mut s = mu;
            for l in (ll..m).rev() {
                if e[l].abs() <= tol * mu {
                    e[l] = 0.0;
                    continue 'outer;
                }
                mu = d[l].abs() * (mu / (mu + e[l].abs()));
                s = s.min(mu);
            }
            sminl = s;
        }
        oldll = ll;
        oldm = m;

        // shift; zero when it would spoil relative accuracy
        let mut shift = 0.0;
        if n as f64 * tol * (sminl / smax) > eps.max(0.01 * tol) {
            let sll;
            if forward {
                sll = d[ll].abs();
                shift = las2(d[m - 1], e[m - 1], d[m]).0;
            } else {
                sll = d[m].abs();
                shift = las2(d[ll], e[ll], d[ll + 1]).0;
            }
            if sll > 0.0 && (shift / sll).powi(2) < eps {
                shift = 0.0;
            }
        }
        sweeps += 1;

        if shift == 0.0 {
            if forward {
                let (mut cs, mut oldcs, mut oldsn) = (1.0, 1.0, 0.0);
                for i in ll..m {
                    let (c, s, r) = rotg(d[i] * cs, e[i]);
                    cs = c;
                    if i > ll {
                        e[i - 1] = oldsn * r;
                    }
                    let (oc, os, di) = rotg(oldcs * r, d[i + 1] * s);
                    oldcs = oc;
                    oldsn = os;
                    d[i] = di;
                }
                let h = d[m] * cs;
                d[m] = h * oldcs;
                e[m - 1] = h * oldsn;
                if e[m - 1].abs() <= thresh {
                    e[m - 1] = 0.0;
                }
            } else {
                let (mut cs, mut oldcs, mut oldsn) = (1.0, 1.0, 0.0);
                for i in (ll + 1..=m).rev() {
                    let (c, s, r) = rotg(d[i] * cs, e[i - 1]);
                    cs = c;
                    if i < m {
                        e[i] = oldsn * r;
                    }
                    let (oc, os, di) = rotg(oldcs * r, d[i - 1] * s);
                    oldcs = oc;
                    oldsn = os;
                    d[i] = di;
                }
                let h = d[ll] * cs;
                d[ll] = h * oldcs;
                e[ll] = h * oldsn;
                if e[ll].abs() <= thresh {
                    e[ll] = 0.0;
                }
            }
        } else if forward {
            let mut f = (d[ll].abs() - shift) * (1f64.copysign(d[ll]) + shift / d[ll]);
            let mut g = e[ll];
            for i in ll..m {
                let (cosr, sinr, r) = rotg(f, g);
                if i > ll {
                    e[i - 1] = r;
                }
                f = cosr * d[i] + sinr * e[i];
                e[i] = cosr * e[i] - sinr * d[i];
                g = sinr * d[i + 1];
                d[i + 1] *= cosr;
                let (cosl, sinl, r) = rotg(f, g);
                d[i] = r;
                f = cosl * e[i] + sinl * d[i + 1];
                d[i + 1] = cosl * d[i + 1] - sinl * e[i];
                if i + 1 < m {
                    g = sinl * e[i + 1];
                    e[i + 1] *= cosl;
                }
            }
            e[m - 1] = f;
            if e[m - 1].abs() <= thresh {
                e[m - 1] = 0.0;
            }
        } else {
            let mut f = (d[m].abs() - shift) * (1f64.copysign(d[m]) + shift / d[m]);
            let mut g = e[m - 1];
            for i in (ll + 1..=m).rev() {
                let (cosr, sinr, r) = rotg(f, g);
                if i < m {
                    e[i] = r;
                }
                f = cosr * d[i] + sinr * e[i - 1];
                e[i - 1] = cosr * e[i - 1] - sinr * d[i];
                g = sinr * d[i - 1];
                d[i - 1] *= cosr;
                let (cosl, sinl, r) = rotg(f, g);
                d[i] = r;
                f = cosl * e[i - 1] + sinl * d[i - 1];
                d[i - 1] = cosl * d[i - 1] - sinl * e[i - 1];
                if i > ll + 1 {
                    g = sinl * e[i - 2];
                    e[i - 2] *= cosl;
                }
            }
            e[ll] = f;
            if e[ll].abs() <= thresh {
                e[ll] = 0.0;
            }
        }
    }
    Ok(())
}
