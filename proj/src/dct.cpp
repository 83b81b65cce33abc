#include <cmath>
#include <cstring>
#include <vector>

#include "randlr/kernels.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace randlr::kernels {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr Index kLaneBlock = 16;

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Batched in-place complex FFT machinery. Data layout is position-major,
// lane-minor: element (position t, lane b) lives at t*lanes + b, so every
// butterfly touches contiguous runs of `lanes` doubles.
struct FftWork {
  Index p = 0;
  std::vector<Index> bitrev;
  std::vector<double> tw_re, tw_im;  // e^{-2pi i k / p}, k < p/2

  explicit FftWork(Index pow2) : p(pow2), bitrev(pow2) {
    Index bits = 0;
    while ((Index(1) << bits) < p) ++bits;
    for (Index t = 0; t < p; ++t) {
      Index r = 0;
      for (Index b = 0; b < bits; ++b)
        if (t & (Index(1) << b)) r |= Index(1) << (bits - 1 - b);
      bitrev[t] = r;
    }
    tw_re.resize(p / 2);
    tw_im.resize(p / 2);
    for (Index k = 0; k < p / 2; ++k) {
      tw_re[k] = std::cos(-2.0 * kPi * double(k) / double(p));
      tw_im[k] = std::sin(-2.0 * kPi * double(k) / double(p));
    }
  }

  // Forward FFT; input must already be in bit-reversed order.
  void run(double* re, double* im, Index lanes, bool inverse) const {
    const double isign = inverse ? -1.0 : 1.0;
    for (Index size = 2; size <= p; size <<= 1) {
      const Index half = size >> 1;
      const Index step = p / size;
      for (Index t0 = 0; t0 < p; t0 += size) {
        for (Index k = 0; k < half; ++k) {
          const double wr = tw_re[k * step];
          const double wi = isign * tw_im[k * step];
          double* ur = re + (t0 + k) * lanes;
          double* ui = im + (t0 + k) * lanes;
          double* vr = re + (t0 + k + half) * lanes;
          double* vi = im + (t0 + k + half) * lanes;
          for (Index b = 0; b < lanes; ++b) {
            const double xr = vr[b] * wr - vi[b] * wi;
            const double xi = vr[b] * wi + vi[b] * wr;
            vr[b] = ur[b] - xr;
            vi[b] = ui[b] - xi;
            ur[b] += xr;
            ui[b] += xi;
          }
        }
      }
    }
    if (inverse) {
      const double scale = 1.0 / double(p);
      for (Index t = 0; t < p * lanes; ++t) {
        re[t] *= scale;
        im[t] *= scale;
      }
    }
  }
};

// Plan for the orthonormal DCT-II of length n via the Makhoul even-odd
// permutation and a length-n DFT; non-power-of-two lengths go through
// Bluestein's chirp-z on a padded power of two.
struct Dct2Plan {
  Index n = 0;
  Index p = 0;  // working FFT size
  bool bluestein = false;
  FftWork fft;
  std::vector<Index> src;              // Makhoul source index per DFT position
  std::vector<double> chirp_re, chirp_im;  // w_t = e^{-i pi t^2 / n}
  std::vector<double> bf_re, bf_im;        // FFT of the Bluestein kernel
  std::vector<double> post_re, post_im;    // s_k * e^{-i pi k/(2n)} (* w_k)

  explicit Dct2Plan(Index len)
      : n(len), p(len > 1 && (len & (len - 1)) == 0 ? len : next_pow2(2 * len - 1)),
        bluestein(!(len > 1 && (len & (len - 1)) == 0) && len > 1),
        fft(len <= 1 ? 1 : p) {
    if (n <= 1) return;
    src.resize(n);
    Index half_up = (n + 1) / 2;
    for (Index j = 0; j < half_up; ++j) src[j] = 2 * j;
    for (Index j = 0; j < n / 2; ++j) src[n - 1 - j] = 2 * j + 1;

    if (bluestein) {
      chirp_re.resize(n);
      chirp_im.resize(n);
      for (Index t = 0; t < n; ++t) {
        // t^2 mod 2n keeps the angle small and accurate
        const Index tt = (t * t) % (2 * n);
        chirp_re[t] = std::cos(-kPi * double(tt) / double(n));
        chirp_im[t] = std::sin(-kPi * double(tt) / double(n));
      }
      // Kernel b_t = conj(w_t), wrapped circularly, then FFT'd once.
      std::vector<double> br(p, 0.0), bi(p, 0.0);
      auto put = [&](Index pos, Index t) {
        br[pos] = chirp_re[t];
        bi[pos] = -chirp_im[t];
      };
      put(0, 0);
      for (Index t = 1; t < n; ++t) {
        put(t, t);
        put(p - t, t);
      }
      // single-lane FFT of b (needs bit-reversed input)
      std::vector<double> br2(p), bi2(p);
      for (Index t = 0; t < p; ++t) {
        br2[fft.bitrev[t]] = br[t];
        bi2[fft.bitrev[t]] = bi[t];
      }
      fft.run(br2.data(), bi2.data(), 1, false);
      bf_re = std::move(br2);
      bf_im = std::move(bi2);
    }

    post_re.resize(n);
    post_im.resize(n);
    for (Index k = 0; k < n; ++k) {
      const double sk = std::sqrt((k == 0 ? 1.0 : 2.0) / double(n));
      double ar = std::cos(-kPi * double(k) / (2.0 * double(n)));
      double ai = std::sin(-kPi * double(k) / (2.0 * double(n)));
      if (bluestein) {
        const double r = ar * chirp_re[k] - ai * chirp_im[k];
        const double i = ar * chirp_im[k] + ai * chirp_re[k];
        ar = r;
        ai = i;
      }
      post_re[k] = sk * ar;
      post_im[k] = sk * ai;
    }
  }

  // Forward orthonormal DCT-II over `lanes` vectors. in/out are accessed via
  // the gather/scatter callbacks: get(t, lane), set(k, lane, value).
  template <class Get, class Set>
  void forward(Index lanes, Get get, Set set, std::vector<double>& re,
               std::vector<double>& im) const {
    if (n == 1) {
      for (Index b = 0; b < lanes; ++b) set(0, b, get(0, b));
      return;
    }
    re.assign(p * lanes, 0.0);
    im.assign(p * lanes, 0.0);
    for (Index t = 0; t < n; ++t) {
      const Index pos = fft.bitrev[t] * lanes;
      if (!bluestein) {
        for (Index b = 0; b < lanes; ++b) re[pos + b] = get(src[t], b);
      } else {
        const double cr = chirp_re[t], ci = chirp_im[t];
        for (Index b = 0; b < lanes; ++b) {
          const double x = get(src[t], b);
          re[pos + b] = x * cr;
          im[pos + b] = x * ci;
        }
      }
    }
    fft.run(re.data(), im.data(), lanes, false);
    if (bluestein) {
      // pointwise multiply by FFT(b), inverse FFT, in bit-reversed reload
      std::vector<double> re2(p * lanes), im2(p * lanes);
      for (Index t = 0; t < p; ++t) {
        const double br = bf_re[t], bi = bf_im[t];
        const Index dst = fft.bitrev[t] * lanes;
        const Index sp = t * lanes;
        for (Index b = 0; b < lanes; ++b) {
          re2[dst + b] = re[sp + b] * br - im[sp + b] * bi;
          im2[dst + b] = re[sp + b] * bi + im[sp + b] * br;
        }
      }
      re.swap(re2);
      im.swap(im2);
      fft.run(re.data(), im.data(), lanes, true);
    }
    for (Index k = 0; k < n; ++k) {
      const double fr = post_re[k], fi = post_im[k];
      const Index sp = k * lanes;
      for (Index b = 0; b < lanes; ++b) set(k, b, re[sp + b] * fr - im[sp + b] * fi);
    }
  }
};

thread_local std::vector<double> tl_re, tl_im;

}  // namespace

double dct2_entry(Index k, Index j, Index n) {
  const double sk = std::sqrt((k == 0 ? 1.0 : 2.0) / double(n));
  return sk * std::cos(kPi * double(k) * (double(j) + 0.5) / double(n));
}

namespace reference {

DenseMatrix dct2_rows(const DenseMatrix& m) {
  const Index rows = m.rows(), n = m.cols();
  DenseMatrix out(rows, n);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j) {
      const double c = dct2_entry(k, j, n);
      if (c == 0.0) continue;
      const double* mj = m.col(j);
      double* ok = out.col(k);
      for (Index i = 0; i < rows; ++i) ok[i] += c * mj[i];
    }
  return out;
}

DenseMatrix dct2_cols(const DenseMatrix& m) {
  const Index nr = m.rows(), cols = m.cols();
  DenseMatrix out(nr, cols);
  for (Index j = 0; j < cols; ++j) {
    const double* mj = m.col(j);
    double* oj = out.col(j);
    for (Index k = 0; k < nr; ++k) {
      double s = 0.0;
      for (Index i = 0; i < nr; ++i) s += dct2_entry(k, i, nr) * mj[i];
      oj[k] = s;
    }
  }
  return out;
}

}  // namespace reference

DenseMatrix dct2_rows(const DenseMatrix& m) {
  const Index rows = m.rows(), n = m.cols();
  DenseMatrix out(rows, n);
  if (rows == 0 || n == 0) return out;
  const Dct2Plan plan(n);
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < (rows + kLaneBlock - 1) / kLaneBlock; ++blk) {
    const Index i0 = blk * kLaneBlock;
    const Index lanes = std::min(kLaneBlock, rows - i0);
    plan.forward(
        lanes, [&](Index t, Index b) { return m(i0 + b, t); },
        [&](Index k, Index b, double v) { out(i0 + b, k) = v; }, tl_re, tl_im);
  }
  return out;
}

DenseMatrix dct2_cols(const DenseMatrix& m) {
  const Index nr = m.rows(), cols = m.cols();
  DenseMatrix out(nr, cols);
  if (nr == 0 || cols == 0) return out;
  const Dct2Plan plan(nr);
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < (cols + kLaneBlock - 1) / kLaneBlock; ++blk) {
    const Index j0 = blk * kLaneBlock;
    const Index lanes = std::min(kLaneBlock, cols - j0);
    plan.forward(
        lanes, [&](Index t, Index b) { return m(t, j0 + b); },
        [&](Index k, Index b, double v) { out(k, j0 + b) = v; }, tl_re, tl_im);
  }
  return out;
}

DenseMatrix idct2_rows(const DenseMatrix& m) {
  // Orthonormal DCT-III = transpose of the DCT-II map. Small sizes only use
  // this (tests); computed via the reference transform's adjoint.
  const Index rows = m.rows(), n = m.cols();
  DenseMatrix out(rows, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      const double c = dct2_entry(k, j, n);
      if (c == 0.0) continue;
      const double* mk = m.col(k);
      double* oj = out.col(j);
      for (Index i = 0; i < rows; ++i) oj[i] += c * mk[i];
    }
  return out;
}

}  // namespace randlr::kernels
