#include "tentfield/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace tentfield {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan plan1(std::size_t n, int sign) {
  std::vector<cplx> buf(n);
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  return fftw_plan_dft_1d(static_cast<int>(n), p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

fftw_plan plan2(std::size_t nx, std::size_t ny, int sign) {
  std::vector<cplx> buf(nx * ny);
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  return fftw_plan_dft_2d(static_cast<int>(nx), static_cast<int>(ny), p, p, sign,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
}

void run(void* plan, std::vector<cplx>& data, std::size_t n) {
  if (data.size() != n) throw std::invalid_argument("fft buffer has wrong length");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(plan), p, p);
}

void destroy(void* plan) {
  if (!plan) return;
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan));
}
}  // namespace

Fft1d::Fft1d(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("fft length must be positive");
  fwd_ = plan1(n, FFTW_FORWARD);
  bwd_ = plan1(n, FFTW_BACKWARD);
}

Fft1d::~Fft1d() {
  destroy(fwd_);
  destroy(bwd_);
}

void Fft1d::forward(std::vector<cplx>& data) const { run(fwd_, data, n_); }
void Fft1d::backward(std::vector<cplx>& data) const { run(bwd_, data, n_); }

Fft2d::Fft2d(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny) {
  if (nx == 0 || ny == 0) throw std::invalid_argument("fft size must be positive");
  fwd_ = plan2(nx, ny, FFTW_FORWARD);
  bwd_ = plan2(nx, ny, FFTW_BACKWARD);
}

Fft2d::~Fft2d() {
  destroy(fwd_);
  destroy(bwd_);
}

void Fft2d::forward(std::vector<cplx>& data) const { run(fwd_, data, nx_ * ny_); }
void Fft2d::backward(std::vector<cplx>& data) const { run(bwd_, data, nx_ * ny_); }

}  // namespace tentfield
