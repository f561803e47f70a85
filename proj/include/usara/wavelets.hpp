#pragma once

#include <span>
#include <vector>

#include "usara/common.hpp"

namespace usara {
namespace wav {

// Orthonormal Daubechies lowpass (scaling) filters db1..db8, standard
// published coefficient tables (db1 is Haar). Values generated by spectral
// factorization of the Daubechies half-band polynomial at 60-digit precision
// and rounded to double; db2 agrees with the closed form
// ((1+sqrt3)/(4 sqrt2), (3+sqrt3)/(4 sqrt2), ...) to the last bit. The filter
// unit tests re-verify orthonormality (autocorrelation at even shifts) and
// the vanishing-moment sums.
inline constexpr double kDb1[2] = {0.7071067811865475244, 0.7071067811865475244};
inline constexpr double kDb2[4] = {0.4829629131445341434, 0.8365163037378079056,
                                   0.2241438680420133810, -0.1294095225512603812};
inline constexpr double kDb3[6] = {0.3326705529500826160,   0.8068915093110925765,
                                   0.4598775021184915701,   -0.1350110200102545887,
                                   -0.08544127388202666169, 0.03522629188570953660};
inline constexpr double kDb4[8] = {0.2303778133088965009,   0.7148465705529156471,
                                   0.6308807679298589079,   -0.02798376941685985421,
                                   -0.1870348117190930841,  0.03084138183556076363,
                                   0.03288301166688519974,  -0.01059740178506903210};
inline constexpr double kDb5[10] = {0.1601023979741929145,    0.6038292697971896705,
                                    0.7243085284377729277,    0.1384281459013207315,
                                    -0.2422948870663820319,   -0.03224486958463837465,
                                    0.07757149384004571352,   -0.006241490212798274274,
                                    -0.01258075199908199947,  0.003335725285473771278};
inline constexpr double kDb6[12] = {0.1115407433501094636,     0.4946238903984530857,
                                    0.7511339080210953507,     0.3152503517091976291,
                                    -0.2262646939654398201,    -0.1297668675672619356,
                                    0.09750160558732304910,    0.02752286553030572863,
                                    -0.03158203931748602957,   0.0005538422011614961393,
                                    0.004777257510945510640,   -0.001077301085308479565};
inline constexpr double kDb7[14] = {0.07785205408500917902,   0.3965393194819173065,
                                    0.7291320908462351199,    0.4697822874051931225,
                                    -0.1439060039285649754,   -0.2240361849938749826,
                                    0.07130921926683026475,   0.08061260915108307191,
                                    -0.03802993693501441358,  -0.01657454163066688065,
                                    0.01255099855609984061,   0.0004295779729213665211,
                                    -0.001801640704047490915, 0.0003537137999745202484};
inline constexpr double kDb8[16] = {0.05441584224310400996,    0.3128715909142999707,
                                    0.6756307362972898068,     0.5853546836542067128,
                                    -0.01582910525634930567,   -0.2840155429615469265,
                                    0.0004724845739132827704,  0.1287474266204784589,
                                    -0.01736930100180754617,   -0.04408825393079475151,
                                    0.01398102791739828165,    0.008746094047405776716,
                                    -0.004870352993451574310,  -0.0003917403733769470463,
                                    0.0006754494064505693664,  -0.0001174767841247695337};

inline std::span<const double> daubechies_lowpass(int order) {
  switch (order) {
    case 1: return kDb1;
    case 2: return kDb2;
    case 3: return kDb3;
    case 4: return kDb4;
    case 5: return kDb5;
    case 6: return kDb6;
    case 7: return kDb7;
    case 8: return kDb8;
    default: throw std::invalid_argument("daubechies_lowpass: order must be in 1..8");
  }
}

// One orthonormal two-channel filter bank. The highpass is the quadrature
// mirror g[t] = (-1)^t h[T-1-t].
struct FilterBank {
  std::vector<double> h, g;
  int taps = 0;
};

inline FilterBank make_daubechies(int order) {
  auto lo = daubechies_lowpass(order);
  FilterBank fb;
  fb.taps = int(lo.size());
  fb.h.assign(lo.begin(), lo.end());
  fb.g.resize(fb.taps);
  for (int t = 0; t < fb.taps; ++t) fb.g[t] = ((t & 1) ? -1.0 : 1.0) * fb.h[fb.taps - 1 - t];
  return fb;
}

// Periodized analysis step: a[k] = sum_t h[t] x[(2k+t) mod L], likewise for
// the detail channel. Output layout: approx in out[0..L/2), detail in
// out[L/2..L). Filters longer than L wrap multiple times; the transform stays
// orthonormal because the quadrature-mirror identities hold at every
// frequency, hence at the L-point grid.
inline void dwt_step(const double* x, int L, const FilterBank& fb, double* out) {
  const int half = L / 2;
  const int T = fb.taps;
  const double* h = fb.h.data();
  const double* g = fb.g.data();
  const int k_nowrap = (T <= L) ? (L - T) / 2 : -1;
  for (int k = 0; k <= k_nowrap; ++k) {
    const double* xp = x + 2 * k;
    double a = 0.0, d = 0.0;
    for (int t = 0; t < T; ++t) {
      a += h[t] * xp[t];
      d += g[t] * xp[t];
    }
    out[k] = a;
    out[half + k] = d;
  }
  for (int k = k_nowrap + 1; k < half; ++k) {
    double a = 0.0, d = 0.0;
    int idx = (2 * k) % L;
    for (int t = 0; t < T; ++t) {
      const double xv = x[idx];
      a += h[t] * xv;
      d += g[t] * xv;
      if (++idx == L) idx = 0;
    }
    out[k] = a;
    out[half + k] = d;
  }
}

// Exact inverse (= adjoint) of dwt_step.
inline void idwt_step(const double* in, int L, const FilterBank& fb, double* x) {
  const int half = L / 2;
  const int T = fb.taps;
  const double* h = fb.h.data();
  const double* g = fb.g.data();
  for (int n = 0; n < L; ++n) x[n] = 0.0;
  const int k_nowrap = (T <= L) ? (L - T) / 2 : -1;
  for (int k = 0; k <= k_nowrap; ++k) {
    double* xp = x + 2 * k;
    const double a = in[k], d = in[half + k];
    for (int t = 0; t < T; ++t) xp[t] += h[t] * a + g[t] * d;
  }
  for (int k = k_nowrap + 1; k < half; ++k) {
    const double a = in[k], d = in[half + k];
    int idx = (2 * k) % L;
    for (int t = 0; t < T; ++t) {
      x[idx] += h[t] * a + g[t] * d;
      if (++idx == L) idx = 0;
    }
  }
}

namespace detail {
inline std::vector<double>& scratch(std::size_t len) {
  thread_local std::vector<double> buf;
  if (buf.size() < len) buf.resize(len);
  return buf;
}
}  // namespace detail

// Separable 2D periodized DWT, Mallat layout, J levels, in place on a
// row-major W x H buffer. W and H must be divisible by 2^J.
inline void dwt2(double* img, int W, int H, int J, const FilterBank& fb) {
  auto& tmp = detail::scratch(std::size_t(std::max(W, H)) * 2);
  double* row_out = tmp.data();
  double* col_buf = tmp.data() + std::max(W, H);
  int cw = W, ch = H;
  for (int level = 0; level < J; ++level) {
    for (int r = 0; r < ch; ++r) {
      double* row = img + std::ptrdiff_t(r) * W;
      dwt_step(row, cw, fb, row_out);
      for (int c = 0; c < cw; ++c) row[c] = row_out[c];
    }
    for (int c = 0; c < cw; ++c) {
      for (int r = 0; r < ch; ++r) col_buf[r] = img[std::ptrdiff_t(r) * W + c];
      dwt_step(col_buf, ch, fb, row_out);
      for (int r = 0; r < ch; ++r) img[std::ptrdiff_t(r) * W + c] = row_out[r];
    }
    cw /= 2;
    ch /= 2;
  }
}

inline void idwt2(double* img, int W, int H, int J, const FilterBank& fb) {
  auto& tmp = detail::scratch(std::size_t(std::max(W, H)) * 2);
  double* out = tmp.data();
  double* buf = tmp.data() + std::max(W, H);
  for (int level = J - 1; level >= 0; --level) {
    const int cw = W >> level, ch = H >> level;
    for (int c = 0; c < cw; ++c) {
      for (int r = 0; r < ch; ++r) buf[r] = img[std::ptrdiff_t(r) * W + c];
      idwt_step(buf, ch, fb, out);
      for (int r = 0; r < ch; ++r) img[std::ptrdiff_t(r) * W + c] = out[r];
    }
    for (int r = 0; r < ch; ++r) {
      double* row = img + std::ptrdiff_t(r) * W;
      for (int c = 0; c < cw; ++c) buf[c] = row[c];
      idwt_step(buf, cw, fb, row);
    }
  }
}

}  // namespace wav
}  // namespace usara
