#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace wmlab {

namespace {

// fftw planning is not thread-safe; execution on a plan's own buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Plan2d {
 public:
  Plan2d(std::size_t h, std::size_t w, int sign) : n_(h * w) {
    in_ = fftw_alloc_complex(n_);
    out_ = fftw_alloc_complex(n_);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), in_, out_,
                             sign, FFTW_ESTIMATE);
  }
  ~Plan2d() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  Plan2d(const Plan2d&) = delete;
  Plan2d& operator=(const Plan2d&) = delete;

  Complex* input() { return reinterpret_cast<Complex*>(in_); }
  const Complex* output() const { return reinterpret_cast<const Complex*>(out_); }
  void run() { fftw_execute(plan_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

Plan2d& plan_for(std::size_t h, std::size_t w, int sign) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, int>,
                        std::unique_ptr<Plan2d>>
      cache;
  auto& slot = cache[{h, w, sign}];
  if (!slot) slot = std::make_unique<Plan2d>(h, w, sign);
  return *slot;
}

}  // namespace

std::vector<Complex> fft2(std::span<const float> plane, std::size_t h,
                          std::size_t w) {
  auto& p = plan_for(h, w, FFTW_FORWARD);
  Complex* in = p.input();
  for (std::size_t i = 0; i < p.size(); ++i) in[i] = Complex(plane[i], 0.0);
  p.run();
  return {p.output(), p.output() + p.size()};
}

std::vector<Complex> fft2(std::span<const Complex> plane, std::size_t h,
                          std::size_t w) {
  auto& p = plan_for(h, w, FFTW_FORWARD);
  std::copy(plane.begin(), plane.end(), p.input());
  p.run();
  return {p.output(), p.output() + p.size()};
}

std::vector<Complex> ifft2(std::span<const Complex> spectrum, std::size_t h,
                           std::size_t w) {
  auto& p = plan_for(h, w, FFTW_BACKWARD);
  std::copy(spectrum.begin(), spectrum.end(), p.input());
  p.run();
  std::vector<Complex> out(p.output(), p.output() + p.size());
  const double scale = 1.0 / static_cast<double>(p.size());
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace wmlab
