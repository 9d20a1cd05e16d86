#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace tentfield {

using cplx = std::complex<double>;

// Thin FFTW wrappers.  Forward uses exp(-2 pi i k n / N), backward the
// opposite sign; neither is normalized.  Plans are built once and executed
// with the new-array interface, so one object may be shared across threads.
class Fft1d {
 public:
  explicit Fft1d(std::size_t n);
  ~Fft1d();
  Fft1d(const Fft1d&) = delete;
  Fft1d& operator=(const Fft1d&) = delete;

  std::size_t size() const { return n_; }
  void forward(std::vector<cplx>& data) const;
  void backward(std::vector<cplx>& data) const;

 private:
  std::size_t n_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

// Row-major nx x ny transform (index = ix * ny + iy).
class Fft2d {
 public:
  Fft2d(std::size_t nx, std::size_t ny);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  void forward(std::vector<cplx>& data) const;
  void backward(std::vector<cplx>& data) const;

 private:
  std::size_t nx_, ny_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

// signed frequency index of bin k in a length-n transform
inline long fft_freq_index(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace tentfield
