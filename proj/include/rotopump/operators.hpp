#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <vector>

#include "rotopump/params.hpp"

namespace rotopump {

using SparseOp = Eigen::SparseMatrix<std::complex<double>>;
using DenseOp = Eigen::MatrixXcd;

struct PairGeometry {
  double r = 1e-9;     // m
  double theta = 0;    // rad, polar angle of the inter-spin vector
  double varphi = 0;   // rad, crystal-frame azimuth
  double phi = 0;      // rad, crystal-to-lab angle (dynamical in the rotor model)

  void validate(double r_min = 0) const {
    if (r <= 0) throw invalid_parameter("PairGeometry: r must be > 0");
    if (r_min > 0 && r < r_min) throw invalid_parameter("PairGeometry: r < r_min");
    if (theta < 0 || theta > pi) throw invalid_parameter("PairGeometry: theta outside [0, pi]");
  }
};

/// Spherical-tensor dipolar coefficients in the alpha_omega (rad/s) convention.
struct DipolarCoefficients {
  std::complex<double> d0, d1, d2;  // rad/s
};

inline DipolarCoefficients dipolar_coefficients(const PairGeometry& g,
                                                const PhysicalConstants& pc = {}) {
  if (g.r <= 0) throw invalid_parameter("dipolar_coefficients: singular geometry r = 0");
  double a = pc.alpha_omega() / (g.r * g.r * g.r);
  double st = std::sin(g.theta), ct = std::cos(g.theta);
  DipolarCoefficients d;
  d.d0 = a * (1.0 - 3.0 * ct * ct);
  d.d1 = -1.5 * a * st * ct * std::polar(1.0, g.varphi);
  d.d2 = -0.75 * a * st * st * std::polar(1.0, 2.0 * g.varphi);
  return d;
}

/// First-order displacement couplings of the dipolar interaction. Returned in
/// the same alpha convention as the supplied alpha (rad/s per meter for
/// alpha_omega, J per meter for alpha_energy).
struct SpinPhononCoefficients {
  double b0, b1;
};

inline SpinPhononCoefficients spin_phonon_coefficients_alpha(double alpha, double r,
                                                             double theta) {
  if (r <= 0) throw invalid_parameter("spin_phonon_coefficients: singular geometry r = 0");
  double r4 = r * r * r * r;
  SpinPhononCoefficients b;
  b.b0 = -(3.0 * alpha / (2.0 * r4)) * std::cos(theta) * (1.0 - 5.0 * std::cos(2.0 * theta));
  b.b1 = -(3.0 * alpha / (16.0 * r4)) * (3.0 * std::cos(theta) + 4.0 * std::cos(3.0 * theta));
  return b;
}

inline SpinPhononCoefficients spin_phonon_coefficients(const PairGeometry& g,
                                                       const PhysicalConstants& pc = {}) {
  return spin_phonon_coefficients_alpha(pc.alpha_omega(), g.r, g.theta);
}

/// NV spin-1 x P1 spin-1/2 x rotor window. Basis index = spin * n_m + (m - m_min)
/// with spin = 2 * iS + iI, NV levels ordered mS = +1, 0, -1 and P1 levels
/// mI = +1/2, -1/2. Spin operators carry hbar explicitly.
class CompositeHilbertSpace {
 public:
  CompositeHilbertSpace(long m_min, long m_max, const PhysicalConstants& pc = {})
      : m_min_(m_min), m_max_(m_max), pc_(pc) {
    if (m_min >= m_max) throw invalid_parameter("CompositeHilbertSpace: empty rotor window");
  }

  long m_min() const { return m_min_; }
  long m_max() const { return m_max_; }
  long n_m() const { return m_max_ - m_min_ + 1; }
  long dim() const { return 6 * n_m(); }

  long index(int iS, int iI, long m) const {
    return (2 * iS + iI) * n_m() + (m - m_min_);
  }

  static double mS_of(int iS) { return 1.0 - double(iS); }        // +1, 0, -1
  static double mI_of(int iI) { return 0.5 - double(iI); }        // +1/2, -1/2

  /// Kron of a 3x3 NV matrix, 2x2 P1 matrix and a rotor m-shift by dm
  /// (unit-amplitude ladder; rows falling outside the window are dropped).
  SparseOp kron(const Eigen::Matrix3cd& nv, const Eigen::Matrix2cd& p1, long dm) const {
    std::vector<Eigen::Triplet<std::complex<double>>> trip;
    for (int s2 = 0; s2 < 3; ++s2)
      for (int s1 = 0; s1 < 3; ++s1)
        for (int i2 = 0; i2 < 2; ++i2)
          for (int i1 = 0; i1 < 2; ++i1) {
            std::complex<double> v = nv(s2, s1) * p1(i2, i1);
            if (v == std::complex<double>(0)) continue;
            for (long m = m_min_; m <= m_max_; ++m) {
              long mt = m + dm;
              if (mt < m_min_ || mt > m_max_) continue;
              trip.emplace_back(int(index(s2, i2, mt)), int(index(s1, i1, m)), v);
            }
          }
    SparseOp op(dim(), dim());
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
  }

  Eigen::Matrix3cd nv_sz() const {
    Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
    for (int i = 0; i < 3; ++i) m(i, i) = pc_.hbar * mS_of(i);
    return m;
  }
  Eigen::Matrix3cd nv_splus() const {
    Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
    m(0, 1) = m(1, 2) = std::sqrt(2.0) * pc_.hbar;  // |0>-> |+1>, |-1> -> |0>
    return m;
  }
  Eigen::Matrix3cd nv_sminus() const { return nv_splus().adjoint(); }
  Eigen::Matrix2cd p1_iz() const {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = 0.5 * pc_.hbar;
    m(1, 1) = -0.5 * pc_.hbar;
    return m;
  }
  Eigen::Matrix2cd p1_iplus() const {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 1) = pc_.hbar;
    return m;
  }
  Eigen::Matrix2cd p1_iminus() const { return p1_iplus().adjoint(); }
  static Eigen::Matrix3cd id3() { return Eigen::Matrix3cd::Identity(); }
  static Eigen::Matrix2cd id2() { return Eigen::Matrix2cd::Identity(); }

  SparseOp Sz() const { return kron(nv_sz(), id2(), 0); }
  SparseOp Iz() const { return kron(id3(), p1_iz(), 0); }
  SparseOp Lz() const {
    std::vector<Eigen::Triplet<std::complex<double>>> trip;
    for (int s = 0; s < 3; ++s)
      for (int i = 0; i < 2; ++i)
        for (long m = m_min_; m <= m_max_; ++m)
          trip.emplace_back(int(index(s, i, m)), int(index(s, i, m)), pc_.hbar * double(m));
    SparseOp op(dim(), dim());
    op.setFromTriplets(trip.begin(), trip.end());
    return op;
  }
  SparseOp Jz() const { return SparseOp(Sz() + Iz() + Lz()); }
  SparseOp lambda(int sign) const { return kron(id3(), id2(), sign); }

  /// Two-spin spherical operators with dimensionless spin matrices, matching
  /// the rad/s coefficient convention.
  SparseOp delta0() const {
    double h2 = pc_.hbar * pc_.hbar;
    SparseOp sziz = kron(nv_sz(), p1_iz(), 0);
    SparseOp ff = kron(nv_sminus(), p1_iplus(), 0) + kron(nv_splus(), p1_iminus(), 0);
    return SparseOp((sziz - 0.25 * ff) / h2);
  }
  SparseOp delta1(int sign, long dm = 0) const {  // sign=+1: delta_{1+}
    double h2 = pc_.hbar * pc_.hbar;
    Eigen::Matrix3cd sp = sign > 0 ? nv_splus() : nv_sminus();
    Eigen::Matrix2cd ip = sign > 0 ? p1_iplus() : p1_iminus();
    return SparseOp((kron(nv_sz(), ip, dm) + kron(sp, p1_iz(), dm)) / h2);
  }
  SparseOp delta2(int sign, long dm = 0) const {  // sign=+1: delta_{2+} = S+ I+
    double h2 = pc_.hbar * pc_.hbar;
    Eigen::Matrix3cd sp = sign > 0 ? nv_splus() : nv_sminus();
    Eigen::Matrix2cd ip = sign > 0 ? p1_iplus() : p1_iminus();
    return SparseOp(kron(sp, ip, dm) / h2);
  }

  const PhysicalConstants& constants() const { return pc_; }

 private:
  long m_min_, m_max_;
  PhysicalConstants pc_;
};

/// Full Hamiltonian in Joules: zero-field splitting, Zeeman terms, the
/// lambda-dressed dipolar coupling and the rotor kinetic term.
inline SparseOp build_full_hamiltonian(const PairGeometry& g, const FieldSpec& field,
                                       double inertia, const CompositeHilbertSpace& sp) {
  const PhysicalConstants& pc = sp.constants();
  auto d = dipolar_coefficients(g, pc);
  double hb = pc.hbar;
  SparseOp szd = SparseOp(sp.Sz() / hb);
  SparseOp izd = SparseOp(sp.Iz() / hb);
  SparseOp h = SparseOp(hb * pc.Delta * SparseOp(szd * szd));
  h += SparseOp(hb * field.omega0 * szd);
  h += SparseOp(hb * field.omega0 * izd);
  h += SparseOp(hb * d.d0 * sp.delta0());
  // lambda_+ accompanies the lowering two-spin operators (momentum ledger:
  // spin loss -> rotor gain).
  h += SparseOp(hb * d.d1 * sp.delta1(-1, +1));
  h += SparseOp(hb * std::conj(d.d1) * sp.delta1(+1, -1));
  h += SparseOp(hb * d.d2 * sp.delta2(-1, +2));
  h += SparseOp(hb * std::conj(d.d2) * sp.delta2(+1, -2));
  // rotor kinetic term
  std::vector<Eigen::Triplet<std::complex<double>>> trip;
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < 2; ++i)
      for (long m = sp.m_min(); m <= sp.m_max(); ++m) {
        double e = double(m) * double(m) * hb * hb / (2.0 * inertia);
        trip.emplace_back(int(sp.index(s, i, m)), int(sp.index(s, i, m)), e);
      }
  SparseOp kin(sp.dim(), sp.dim());
  kin.setFromTriplets(trip.begin(), trip.end());
  return SparseOp(h + kin);
}

struct PairSubspaceResult {
  DenseOp h_restricted;    // ordered chain A sites then chain B sites
  double leakage_norm = 0; // Frobenius norm of couplings leaving the subspace
  double hd_norm = 0;      // Frobenius norm of the dipolar part
  double hop_amplitude = 0;  // |<B, m+2| H |A, m>| on interior blocks, Joules
};

/// Restriction of H to span{|0,+1/2>, |-1,-1/2>} x rotor.
inline PairSubspaceResult truncate_to_pair_subspace(const SparseOp& h,
                                                    const CompositeHilbertSpace& sp) {
  long nm = sp.n_m();
  std::vector<long> keep;
  keep.reserve(size_t(2 * nm));
  for (long m = sp.m_min(); m <= sp.m_max(); ++m) keep.push_back(sp.index(1, 0, m));
  for (long m = sp.m_min(); m <= sp.m_max(); ++m) keep.push_back(sp.index(2, 1, m));
  DenseOp hd = DenseOp(h);
  PairSubspaceResult res;
  res.h_restricted.resize(2 * nm, 2 * nm);
  for (long i = 0; i < 2 * nm; ++i)
    for (long j = 0; j < 2 * nm; ++j)
      res.h_restricted(i, j) = hd(keep[size_t(i)], keep[size_t(j)]);
  std::vector<bool> in(size_t(sp.dim()), false);
  for (long k : keep) in[size_t(k)] = true;
  double leak2 = 0;
  for (long i = 0; i < sp.dim(); ++i)
    for (long j = 0; j < sp.dim(); ++j)
      if (in[size_t(j)] != in[size_t(i)]) leak2 += std::norm(hd(i, j));
  res.leakage_norm = std::sqrt(leak2);
  long mid = nm / 2;
  if (mid + 2 < nm)
    res.hop_amplitude = std::abs(res.h_restricted(nm + mid + 2, mid));
  return res;
}

// ---------------------------------------------------------------------------
// Two-pair transformed Hamiltonian. Each pair is restricted to its
// {|0,+1/2>, |-1,-1/2>} doublet, so the spin space is 4-dimensional and the
// z-spin of the doublet states is +1/2 and -3/2 (in hbar units).

struct TwoPairResult {
  Eigen::Matrix4cd h;             // closed form at rotor slice m, Joules
  double local_a = 0;             // hbar^2 d2'_a (Joules)
  double local_b = 0;
  double transverse = 0;          // (hbar^2/J)(1-m)
  double pair_coupling = 0;       // hbar^2/J
  double constant = 0;            // (hbar^2/2J)(m^2-2m+3)
  Eigen::Matrix4cd secularized;   // double-raising/lowering terms dropped
  Eigen::Matrix2cd u_mu_a, u_mu_b;
  bool regime_ok = true;          // hbar^2|d2'| >> hbar^2/J
};

namespace detail {
/// 2x2 unitary with U [[0, conj(c)], [c, 0]] U^dag = |c| sigma_z and
/// U sigma_z U^dag = -sigma_x (the phase convention that also fixes the
/// transformed z-spin identity).
inline Eigen::Matrix2cd pair_diagonalizer(std::complex<double> c) {
  double chi = std::arg(c);
  Eigen::Matrix2cd p = Eigen::Matrix2cd::Zero();
  p(0, 0) = std::polar(1.0, chi / 2.0);
  p(1, 1) = std::polar(1.0, -chi / 2.0);
  Eigen::Matrix2cd v;
  v << 1, 1, -1, 1;
  v *= 1.0 / std::sqrt(2.0);
  return v * p;
}
}  // namespace detail

/// Closed-form transformed two-pair Hamiltonian at rotor slice m: local z'
/// fields set by the pair couplings, a transverse field (hbar^2/J)(1-m), and
/// the distance-independent pair-pair coupling hbar^2/J.
inline TwoPairResult two_pair_transformed_hamiltonian(std::complex<double> d2a,
                                                      std::complex<double> d2b,
                                                      double inertia, long m,
                                                      const PhysicalConstants& pc = {}) {
  if (inertia <= 0) throw invalid_parameter("two_pair_transformed_hamiltonian: inertia <= 0");
  double hb = pc.hbar;
  double h2j = hb * hb / inertia;
  TwoPairResult out;
  // coupling element of hbar*(d2 delta_2-) inside the doublet: sqrt(2)*hbar*d2
  std::complex<double> ca = std::sqrt(2.0) * hb * d2a;
  std::complex<double> cb = std::sqrt(2.0) * hb * d2b;
  out.local_a = std::abs(ca);
  out.local_b = std::abs(cb);
  out.transverse = h2j * (1.0 - double(m));
  out.pair_coupling = h2j;
  out.constant = 0.5 * h2j * (double(m) * double(m) - 2.0 * double(m) + 3.0);
  out.u_mu_a = detail::pair_diagonalizer(ca);
  out.u_mu_b = detail::pair_diagonalizer(cb);
  out.regime_ok = std::min(out.local_a, out.local_b) > 10.0 * h2j;

  Eigen::Matrix2cd sz = Eigen::Matrix2cd::Zero(), sx = Eigen::Matrix2cd::Zero(),
                   sy = Eigen::Matrix2cd::Zero(), id = Eigen::Matrix2cd::Identity();
  sz(0, 0) = 1;
  sz(1, 1) = -1;
  sx(0, 1) = sx(1, 0) = 1;
  sy(0, 1) = std::complex<double>(0, -1);
  sy(1, 0) = std::complex<double>(0, 1);
  auto kron2 = [](const Eigen::Matrix2cd& x, const Eigen::Matrix2cd& y) {
    Eigen::Matrix4cd k;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = x(i, j) * y;
    return k;
  };
  Eigen::Matrix4cd id4 = Eigen::Matrix4cd::Identity();
  out.h = out.local_a * kron2(sz, id) + out.local_b * kron2(id, sz) +
          out.constant * id4 + out.transverse * (kron2(sx, id) + kron2(id, sx)) +
          out.pair_coupling * kron2(sx, sx);
  // sigma_x sigma_x = mu+mu- + mu-mu+ + mu+mu+ + mu-mu-; the secular form
  // keeps only the first two, i.e. (sx sx + sy sy)/2.
  out.secularized = out.local_a * kron2(sz, id) + out.local_b * kron2(id, sz) +
                    out.constant * id4 +
                    out.transverse * (kron2(sx, id) + kron2(id, sx)) +
                    0.5 * out.pair_coupling * (kron2(sx, sx) + kron2(sy, sy));
  return out;
}

}  // namespace rotopump
