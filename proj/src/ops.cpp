#include "spadi/ops.hpp"

#include <algorithm>
#include <cmath>

namespace spadi {

void Tape::record(std::function<void()> backward_fn) {
  SPADI_CHECK(!frozen_, "tape is frozen after backward; record a new tape");
  nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor& loss) {
  SPADI_CHECK(!frozen_, "backward called twice on the same tape");
  SPADI_CHECK(loss.numel() == 1, "backward requires a scalar loss, got shape ",
              to_string(loss.shape()));
  frozen_ = true;
  Tensor l = loss;
  l.grad()[0] += 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

namespace {

bool track(Tape* tape, std::initializer_list<const Tensor*> ins) {
  if (!tape) return false;
  for (const Tensor* t : ins)
    if (t->needs_grad()) return true;
  return false;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  SPADI_CHECK(a.shape() == b.shape(), op, ": shape mismatch ",
              to_string(a.shape()), " vs ", to_string(b.shape()));
}

// Unary elementwise helper: fwd(x) and dfdx evaluated from (x, out).
template <class F, class D>
Tensor unary_op(const Tensor& x, Tape* tape, F fwd, D dfdx) {
  Tensor out = Tensor::zeros(x.shape());
  const float* xp = x.data();
  float* op = out.data();
  const long long n = x.numel();
  for (long long i = 0; i < n; ++i) op[i] = fwd(xp[i]);
  if (track(tape, {&x})) {
    out.mark_needs_grad();
    Tensor xc = x, oc = out;
    tape->record([xc, oc, dfdx]() mutable {
      const float* g = oc.grad();
      const float* xp = xc.data();
      const float* op = oc.data();
      float* gx = xc.grad();
      for (long long i = 0, n = xc.numel(); i < n; ++i)
        gx[i] += g[i] * dfdx(xp[i], op[i]);
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b, Tape* tape) {
  check_same_shape("add", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const float* ap = a.data();
  const float* bp = b.data();
  float* op = out.data();
  for (long long i = 0, n = a.numel(); i < n; ++i) op[i] = ap[i] + bp[i];
  if (track(tape, {&a, &b})) {
    out.mark_needs_grad();
    Tensor ac = a, bc = b, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const float* g = oc.grad();
      const long long n = oc.numel();
      if (ac.needs_grad()) {
        float* ga = ac.grad();
        for (long long i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (bc.needs_grad()) {
        float* gb = bc.grad();
        for (long long i = 0; i < n; ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b, Tape* tape) {
  check_same_shape("sub", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const float* ap = a.data();
  const float* bp = b.data();
  float* op = out.data();
  for (long long i = 0, n = a.numel(); i < n; ++i) op[i] = ap[i] - bp[i];
  if (track(tape, {&a, &b})) {
    out.mark_needs_grad();
    Tensor ac = a, bc = b, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const float* g = oc.grad();
      const long long n = oc.numel();
      if (ac.needs_grad()) {
        float* ga = ac.grad();
        for (long long i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (bc.needs_grad()) {
        float* gb = bc.grad();
        for (long long i = 0; i < n; ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b, Tape* tape) {
  check_same_shape("mul", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const float* ap = a.data();
  const float* bp = b.data();
  float* op = out.data();
  for (long long i = 0, n = a.numel(); i < n; ++i) op[i] = ap[i] * bp[i];
  if (track(tape, {&a, &b})) {
    out.mark_needs_grad();
    Tensor ac = a, bc = b, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const float* g = oc.grad();
      const float* ap = ac.data();
      const float* bp = bc.data();
      const long long n = oc.numel();
      if (ac.needs_grad()) {
        float* ga = ac.grad();
        for (long long i = 0; i < n; ++i) ga[i] += g[i] * bp[i];
      }
      if (bc.needs_grad()) {
        float* gb = bc.grad();
        for (long long i = 0; i < n; ++i) gb[i] += g[i] * ap[i];
      }
    });
  }
  return out;
}

Tensor bmul(const Tensor& x, const Tensor& m, Tape* tape) {
  const Shape& xs = x.shape();
  const Shape& ms = m.shape();
  SPADI_CHECK(ms.c == 1 && ms.n == xs.n && ms.h == xs.h && ms.w == xs.w,
              "bmul: map ", to_string(ms), " does not broadcast over ",
              to_string(xs));
  Tensor out = Tensor::zeros(xs);
  const float* xp = x.data();
  const float* mp = m.data();
  float* op = out.data();
  const long long plane = 1LL * xs.h * xs.w;
  for (int n = 0; n < xs.n; ++n) {
    const float* mrow = mp + n * plane;
    for (int c = 0; c < xs.c; ++c) {
      const float* xr = xp + (1LL * n * xs.c + c) * plane;
      float* orow = op + (1LL * n * xs.c + c) * plane;
      for (long long i = 0; i < plane; ++i) orow[i] = xr[i] * mrow[i];
    }
  }
  if (track(tape, {&x, &m})) {
    out.mark_needs_grad();
    Tensor xc = x, mc = m, oc = out;
    tape->record([xc, mc, oc]() mutable {
      const Shape& xs = xc.shape();
      const long long plane = 1LL * xs.h * xs.w;
      const float* g = oc.grad();
      if (xc.needs_grad()) {
        float* gx = xc.grad();
        const float* mp = mc.data();
        for (int n = 0; n < xs.n; ++n) {
          const float* mrow = mp + n * plane;
          for (int c = 0; c < xs.c; ++c) {
            const float* gr = g + (1LL * n * xs.c + c) * plane;
            float* gxr = gx + (1LL * n * xs.c + c) * plane;
            for (long long i = 0; i < plane; ++i) gxr[i] += gr[i] * mrow[i];
          }
        }
      }
      if (mc.needs_grad()) {
        float* gm = mc.grad();
        const float* xp = xc.data();
        for (int n = 0; n < xs.n; ++n) {
          float* gmr = gm + n * plane;
          for (int c = 0; c < xs.c; ++c) {
            const float* gr = g + (1LL * n * xs.c + c) * plane;
            const float* xr = xp + (1LL * n * xs.c + c) * plane;
            for (long long i = 0; i < plane; ++i) gmr[i] += gr[i] * xr[i];
          }
        }
      }
    });
  }
  return out;
}

Tensor max2(const Tensor& a, const Tensor& b, Tape* tape) {
  check_same_shape("max2", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const float* ap = a.data();
  const float* bp = b.data();
  float* op = out.data();
  for (long long i = 0, n = a.numel(); i < n; ++i)
    op[i] = std::max(ap[i], bp[i]);
  if (track(tape, {&a, &b})) {
    out.mark_needs_grad();
    Tensor ac = a, bc = b, oc = out;
    tape->record([ac, bc, oc]() mutable {
      const float* g = oc.grad();
      const float* ap = ac.data();
      const float* bp = bc.data();
      const long long n = oc.numel();
      if (ac.needs_grad()) {
        float* ga = ac.grad();
        for (long long i = 0; i < n; ++i)
          if (ap[i] >= bp[i]) ga[i] += g[i];
      }
      if (bc.needs_grad()) {
        float* gb = bc.grad();
        for (long long i = 0; i < n; ++i)
          if (ap[i] < bp[i]) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, float s, Tape* tape) {
  return unary_op(
      x, tape, [s](float v) { return v * s; },
      [s](float, float) { return s; });
}

Tensor add_scalar(const Tensor& x, float s, Tape* tape) {
  return unary_op(
      x, tape, [s](float v) { return v + s; },
      [](float, float) { return 1.0f; });
}

Tensor relu(const Tensor& x, Tape* tape) {
  return unary_op(
      x, tape, [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Tensor exp(const Tensor& x, Tape* tape) {
  return unary_op(
      x, tape, [](float v) { return std::exp(v); },
      [](float, float o) { return o; });
}

Tensor log(const Tensor& x, Tape* tape) {
  return unary_op(
      x, tape, [](float v) { return std::log(v); },
      [](float v, float) { return 1.0f / v; });
}

Tensor abs(const Tensor& x, Tape* tape) {
  return unary_op(
      x, tape, [](float v) { return std::fabs(v); },
      [](float v, float) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); });
}

Tensor clamp_min(const Tensor& x, float lo, Tape* tape) {
  return unary_op(
      x, tape, [lo](float v) { return v < lo ? lo : v; },
      [lo](float v, float) { return v >= lo ? 1.0f : 0.0f; });
}

Tensor safe_recip(const Tensor& x, float eps, Tape* tape) {
  return unary_op(
      x, tape,
      [eps](float v) {
        float d = v + eps;
        return d == 0.0f ? 0.0f : 1.0f / d;
      },
      [eps](float v, float o) {
        float d = v + eps;
        return d == 0.0f ? 0.0f : -o * o;
      });
}

std::pair<Tensor, Tensor> softmax2(const Tensor& a, const Tensor& b,
                                   Tape* tape) {
  check_same_shape("softmax2", a, b);
  Tensor pa = Tensor::zeros(a.shape());
  Tensor pb = Tensor::zeros(a.shape());
  const float* ap = a.data();
  const float* bp = b.data();
  float* pap = pa.data();
  float* pbp = pb.data();
  for (long long i = 0, n = a.numel(); i < n; ++i) {
    float m = std::max(ap[i], bp[i]);
    float ea = std::exp(ap[i] - m);
    float eb = std::exp(bp[i] - m);
    float z = ea + eb;
    pap[i] = ea / z;
    pbp[i] = eb / z;
  }
  if (track(tape, {&a, &b})) {
    pa.mark_needs_grad();
    pb.mark_needs_grad();
    Tensor ac = a, bc = b, pac = pa, pbc = pb;
    tape->record([ac, bc, pac, pbc]() mutable {
      const float* ga = pac.grad();
      const float* gb = pbc.grad();
      const float* pap = pac.data();
      const float* pbp = pbc.data();
      const long long n = pac.numel();
      for (long long i = 0; i < n; ++i) {
        // d pa/da = pa*pb, d pa/db = -pa*pb and symmetrically for pb.
        float j = pap[i] * pbp[i];
        float d = (ga[i] - gb[i]) * j;
        if (ac.needs_grad()) ac.grad()[i] += d;
        if (bc.needs_grad()) bc.grad()[i] -= d;
      }
    });
  }
  return {pa, pb};
}

Tensor sum(const Tensor& x, Tape* tape) {
  double acc = 0.0;
  const float* xp = x.data();
  for (long long i = 0, n = x.numel(); i < n; ++i) acc += xp[i];
  Tensor out = Tensor::scalar(float(acc));
  if (track(tape, {&x})) {
    out.mark_needs_grad();
    Tensor xc = x, oc = out;
    tape->record([xc, oc]() mutable {
      const float g = oc.grad()[0];
      float* gx = xc.grad();
      for (long long i = 0, n = xc.numel(); i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x, Tape* tape) {
  double acc = 0.0;
  const float* xp = x.data();
  const long long n = x.numel();
  for (long long i = 0; i < n; ++i) acc += xp[i];
  Tensor out = Tensor::scalar(float(acc / double(n)));
  if (track(tape, {&x})) {
    out.mark_needs_grad();
    Tensor xc = x, oc = out;
    tape->record([xc, oc]() mutable {
      const float g = oc.grad()[0] / float(xc.numel());
      float* gx = xc.grad();
      for (long long i = 0, n = xc.numel(); i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor slice_channels(const Tensor& x, int c0, int count, Tape* tape) {
  const Shape& s = x.shape();
  SPADI_CHECK(c0 >= 0 && count > 0 && c0 + count <= s.c,
              "slice_channels: [", c0, ",", c0 + count, ") out of ", s.c);
  Tensor out = Tensor::zeros({s.n, count, s.h, s.w});
  const long long plane = 1LL * s.h * s.w;
  const float* xp = x.data();
  float* op = out.data();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < count; ++c)
      std::copy_n(xp + (1LL * n * s.c + c0 + c) * plane, plane,
                  op + (1LL * n * count + c) * plane);
  if (track(tape, {&x})) {
    out.mark_needs_grad();
    Tensor xc = x, oc = out;
    tape->record([xc, oc, c0, count]() mutable {
      const Shape& s = xc.shape();
      const long long plane = 1LL * s.h * s.w;
      const float* g = oc.grad();
      float* gx = xc.grad();
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < count; ++c) {
          const float* gr = g + (1LL * n * count + c) * plane;
          float* gxr = gx + (1LL * n * s.c + c0 + c) * plane;
          for (long long i = 0; i < plane; ++i) gxr[i] += gr[i];
        }
    });
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x, Tape* tape) {
  const Shape& s = x.shape();
  Tensor out = Tensor::zeros({s.n, s.c, 1, 1});
  const long long plane = 1LL * s.h * s.w;
  const float* xp = x.data();
  float* op = out.data();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      double acc = 0.0;
      const float* xr = xp + (1LL * n * s.c + c) * plane;
      for (long long i = 0; i < plane; ++i) acc += xr[i];
      op[1LL * n * s.c + c] = float(acc / double(plane));
    }
  if (track(tape, {&x})) {
    out.mark_needs_grad();
    Tensor xc = x, oc = out;
    tape->record([xc, oc]() mutable {
      const Shape& s = xc.shape();
      const long long plane = 1LL * s.h * s.w;
      const float* g = oc.grad();
      float* gx = xc.grad();
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
          float gv = g[1LL * n * s.c + c] / float(plane);
          float* gxr = gx + (1LL * n * s.c + c) * plane;
          for (long long i = 0; i < plane; ++i) gxr[i] += gv;
        }
    });
  }
  return out;
}

Tensor avg_pool2x2(const Tensor& x, Tape* tape) {
  const Shape& s = x.shape();
  SPADI_CHECK(s.h % 2 == 0 && s.w % 2 == 0,
              "avg_pool2x2: spatial size must be even, got ", to_string(s));
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor out = Tensor::zeros(os);
  const float* xp = x.data();
  float* op = out.data();
  for (long long pl = 0, np = 1LL * s.n * s.c; pl < np; ++pl) {
    const float* xr = xp + pl * s.h * s.w;
    float* orow = op + pl * os.h * os.w;
    for (int y = 0; y < os.h; ++y)
      for (int xw = 0; xw < os.w; ++xw) {
        const float* p0 = xr + (2LL * y) * s.w + 2 * xw;
        orow[1LL * y * os.w + xw] =
            0.25f * (p0[0] + p0[1] + p0[s.w] + p0[s.w + 1]);
      }
  }
  if (track(tape, {&x})) {
    out.mark_needs_grad();
    Tensor xc = x, oc = out;
    tape->record([xc, oc]() mutable {
      const Shape& s = xc.shape();
      const Shape& os = oc.shape();
      const float* g = oc.grad();
      float* gx = xc.grad();
      for (long long pl = 0, np = 1LL * s.n * s.c; pl < np; ++pl) {
        const float* gr = g + pl * os.h * os.w;
        float* gxr = gx + pl * s.h * s.w;
        for (int y = 0; y < os.h; ++y)
          for (int xw = 0; xw < os.w; ++xw) {
            const float gv = 0.25f * gr[1LL * y * os.w + xw];
            float* p0 = gxr + (2LL * y) * s.w + 2 * xw;
            p0[0] += gv;
            p0[1] += gv;
            p0[s.w] += gv;
            p0[s.w + 1] += gv;
          }
      }
    });
  }
  return out;
}

Tensor scalar_expand(const Tensor& s, const Tensor& pattern, Tape* tape) {
  SPADI_CHECK(s.numel() == 1, "scalar_expand: scalar operand has shape ",
              to_string(s.shape()));
  Tensor out = Tensor::zeros(pattern.shape());
  const float sv = s.item();
  const float* pp = pattern.data();
  float* op = out.data();
  for (long long i = 0, n = pattern.numel(); i < n; ++i) op[i] = sv * pp[i];
  if (track(tape, {&s})) {
    out.mark_needs_grad();
    Tensor sc = s, pc = pattern, oc = out;
    tape->record([sc, pc, oc]() mutable {
      const float* g = oc.grad();
      const float* pp = pc.data();
      double acc = 0.0;
      for (long long i = 0, n = pc.numel(); i < n; ++i) acc += double(g[i]) * pp[i];
      sc.grad()[0] += float(acc);
    });
  }
  return out;
}

namespace {

// axis: 0 -> correlate along H, 1 -> along W.
Tensor corr1d(const Tensor& x, const Tensor& k, int axis, Tape* tape) {
  const Shape& s = x.shape();
  const Shape& ks = k.shape();
  const int len = axis == 0 ? ks.h : ks.w;
  SPADI_CHECK(ks.n == 1 && ks.c == 1 && (axis == 0 ? ks.w : ks.h) == 1 &&
                  len % 2 == 1,
              "corr1d: bad kernel shape ", to_string(ks));
  const int r = len / 2;
  Tensor out = Tensor::zeros(s);
  const float* kp = k.data();
  const float* xp = x.data();
  float* op = out.data();
  const long long plane = 1LL * s.h * s.w;
  const long long nplanes = 1LL * s.n * s.c;
  for (long long pl = 0; pl < nplanes; ++pl) {
    const float* xr = xp + pl * plane;
    float* orow = op + pl * plane;
    if (axis == 0) {
      for (int y = 0; y < s.h; ++y)
        for (int d = -r; d <= r; ++d) {
          int yy = y + d;
          if (yy < 0 || yy >= s.h) continue;
          const float kv = kp[d + r];
          const float* src = xr + 1LL * yy * s.w;
          float* dst = orow + 1LL * y * s.w;
          for (int xw = 0; xw < s.w; ++xw) dst[xw] += kv * src[xw];
        }
    } else {
      for (int y = 0; y < s.h; ++y) {
        const float* src = xr + 1LL * y * s.w;
        float* dst = orow + 1LL * y * s.w;
        for (int d = -r; d <= r; ++d) {
          const float kv = kp[d + r];
          int lo = std::max(0, -d), hi = std::min(s.w, s.w - d);
          for (int xw = lo; xw < hi; ++xw) dst[xw] += kv * src[xw + d];
        }
      }
    }
  }
  if (track(tape, {&x, &k})) {
    out.mark_needs_grad();
    Tensor xc = x, kc = k, oc = out;
    tape->record([xc, kc, oc, axis, r]() mutable {
      const Shape& s = xc.shape();
      const float* g = oc.grad();
      const float* kp = kc.data();
      const float* xp = xc.data();
      const long long plane = 1LL * s.h * s.w;
      const long long nplanes = 1LL * s.n * s.c;
      const bool gx = xc.needs_grad();
      const bool gk = kc.needs_grad();
      std::vector<double> kacc(gk ? 2 * r + 1 : 0, 0.0);
      for (long long pl = 0; pl < nplanes; ++pl) {
        const float* gr = g + pl * plane;
        const float* xr = xp + pl * plane;
        float* gxr = gx ? xc.grad() + pl * plane : nullptr;
        for (int y = 0; y < s.h; ++y)
          for (int d = -r; d <= r; ++d) {
            int yy = axis == 0 ? y + d : y;
            if (yy < 0 || yy >= s.h) continue;
            if (axis == 0) {
              const float kv = kp[d + r];
              const float* grow = gr + 1LL * y * s.w;
              const float* xrow = xr + 1LL * yy * s.w;
              if (gx) {
                float* gxrow = gxr + 1LL * yy * s.w;
                for (int xw = 0; xw < s.w; ++xw) gxrow[xw] += kv * grow[xw];
              }
              if (gk) {
                double a = 0.0;
                for (int xw = 0; xw < s.w; ++xw)
                  a += double(grow[xw]) * xrow[xw];
                kacc[d + r] += a;
              }
            } else {
              const float kv = kp[d + r];
              const float* grow = gr + 1LL * y * s.w;
              const float* xrow = xr + 1LL * y * s.w;
              int lo = std::max(0, -d), hi = std::min(s.w, s.w - d);
              if (gx) {
                float* gxrow = gxr + 1LL * y * s.w;
                for (int xw = lo; xw < hi; ++xw)
                  gxrow[xw + d] += kv * grow[xw];
              }
              if (gk) {
                double a = 0.0;
                for (int xw = lo; xw < hi; ++xw)
                  a += double(grow[xw]) * xrow[xw + d];
                kacc[d + r] += a;
              }
            }
          }
      }
      if (gk) {
        float* gkp = kc.grad();
        for (int i = 0; i <= 2 * r; ++i) gkp[i] += float(kacc[i]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor corr1d_h(const Tensor& x, const Tensor& k, Tape* tape) {
  return corr1d(x, k, 0, tape);
}

Tensor corr1d_w(const Tensor& x, const Tensor& k, Tape* tape) {
  return corr1d(x, k, 1, tape);
}

Tensor corr2d(const Tensor& x, const Tensor& k, Tape* tape) {
  const Shape& s = x.shape();
  const Shape& ks = k.shape();
  SPADI_CHECK(ks.n == 1 && ks.c == 1 && ks.h == ks.w && ks.h % 2 == 1,
              "corr2d: bad kernel shape ", to_string(ks));
  const int r = ks.h / 2;
  const int L = ks.h;
  Tensor out = Tensor::zeros(s);
  const float* kp = k.data();
  const float* xp = x.data();
  float* op = out.data();
  const long long plane = 1LL * s.h * s.w;
  const long long nplanes = 1LL * s.n * s.c;
  for (long long pl = 0; pl < nplanes; ++pl) {
    const float* xr = xp + pl * plane;
    float* orow = op + pl * plane;
    for (int y = 0; y < s.h; ++y)
      for (int dy = -r; dy <= r; ++dy) {
        int yy = y + dy;
        if (yy < 0 || yy >= s.h) continue;
        const float* krow = kp + 1LL * (dy + r) * L;
        const float* src = xr + 1LL * yy * s.w;
        float* dst = orow + 1LL * y * s.w;
        for (int dx = -r; dx <= r; ++dx) {
          const float kv = krow[dx + r];
          if (kv == 0.0f) continue;
          int lo = std::max(0, -dx), hi = std::min(s.w, s.w - dx);
          for (int xw = lo; xw < hi; ++xw) dst[xw] += kv * src[xw + dx];
        }
      }
  }
  if (track(tape, {&x, &k})) {
    out.mark_needs_grad();
    Tensor xc = x, kc = k, oc = out;
    tape->record([xc, kc, oc, r, L]() mutable {
      const Shape& s = xc.shape();
      const float* g = oc.grad();
      const float* kp = kc.data();
      const float* xp = xc.data();
      const long long plane = 1LL * s.h * s.w;
      const long long nplanes = 1LL * s.n * s.c;
      const bool gx = xc.needs_grad();
      const bool gk = kc.needs_grad();
      std::vector<double> kacc(gk ? size_t(L) * L : 0, 0.0);
      for (long long pl = 0; pl < nplanes; ++pl) {
        const float* gr = g + pl * plane;
        const float* xr = xp + pl * plane;
        float* gxr = gx ? xc.grad() + pl * plane : nullptr;
        for (int y = 0; y < s.h; ++y)
          for (int dy = -r; dy <= r; ++dy) {
            int yy = y + dy;
            if (yy < 0 || yy >= s.h) continue;
            const float* grow = gr + 1LL * y * s.w;
            const float* xrow = xr + 1LL * yy * s.w;
            for (int dx = -r; dx <= r; ++dx) {
              int lo = std::max(0, -dx), hi = std::min(s.w, s.w - dx);
              if (gx) {
                const float kv = kp[1LL * (dy + r) * L + dx + r];
                if (kv != 0.0f) {
                  float* gxrow = gxr + 1LL * yy * s.w;
                  for (int xw = lo; xw < hi; ++xw)
                    gxrow[xw + dx] += kv * grow[xw];
                }
              }
              if (gk) {
                double a = 0.0;
                for (int xw = lo; xw < hi; ++xw)
                  a += double(grow[xw]) * xrow[xw + dx];
                kacc[size_t((dy + r) * L + dx + r)] += a;
              }
            }
          }
      }
      if (gk) {
        float* gkp = kc.grad();
        for (int i = 0; i < L * L; ++i) gkp[i] += float(kacc[i]);
      }
    });
  }
  return out;
}

Tensor softmax_ce_loss(const Tensor& logits, const std::vector<int>& labels,
                       Tape* tape) {
  const Shape& s = logits.shape();
  const long long positions = 1LL * s.n * s.h * s.w;
  SPADI_CHECK((long long)labels.size() == positions,
              "softmax_ce_loss: ", labels.size(), " labels for ", positions,
              " positions of ", to_string(s));
  const int K = s.c;
  const long long plane = 1LL * s.h * s.w;
  const float* lp = logits.data();
  double acc = 0.0;
  // probs kept for the backward pass
  std::vector<float> probs(size_t(logits.numel()));
  for (int n = 0; n < s.n; ++n)
    for (long long i = 0; i < plane; ++i) {
      float mx = -1e30f;
      for (int k = 0; k < K; ++k)
        mx = std::max(mx, lp[(1LL * n * K + k) * plane + i]);
      double z = 0.0;
      for (int k = 0; k < K; ++k)
        z += std::exp(double(lp[(1LL * n * K + k) * plane + i]) - mx);
      const int lab = labels[size_t(n * plane + i)];
      SPADI_CHECK(lab >= 0 && lab < K, "softmax_ce_loss: label ", lab,
                  " out of range [0,", K, ")");
      for (int k = 0; k < K; ++k) {
        double p = std::exp(double(lp[(1LL * n * K + k) * plane + i]) - mx) / z;
        probs[size_t((1LL * n * K + k) * plane + i)] = float(p);
      }
      acc -= double(lp[(1LL * n * K + lab) * plane + i]) - mx - std::log(z);
    }
  Tensor out = Tensor::scalar(float(acc / double(positions)));
  if (track(tape, {&logits})) {
    out.mark_needs_grad();
    Tensor lc = logits, oc = out;
    tape->record([lc, oc, labels, probs = std::move(probs), positions]() mutable {
      const Shape& s = lc.shape();
      const int K = s.c;
      const long long plane = 1LL * s.h * s.w;
      const float g = oc.grad()[0] / float(positions);
      float* gl = lc.grad();
      for (int n = 0; n < s.n; ++n)
        for (long long i = 0; i < plane; ++i) {
          const int lab = labels[size_t(n * plane + i)];
          for (int k = 0; k < K; ++k) {
            float p = probs[size_t((1LL * n * K + k) * plane + i)];
            gl[(1LL * n * K + k) * plane + i] += g * (p - (k == lab ? 1.0f : 0.0f));
          }
        }
    });
  }
  return out;
}

Tensor gaussian(const Shape& s, Rng& rng, float stddev, bool requires_grad) {
  Tensor t = Tensor::zeros(s, requires_grad);
  float* p = t.data();
  for (long long i = 0, n = t.numel(); i < n; ++i) p[i] = stddev * rng.normal();
  return t;
}

}  // namespace spadi
