#ifndef MUHS_FFT_HPP
#define MUHS_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace muhs::fft {

/// Real-to-complex and complex-to-real plans for one transform length.
///
/// Plans are created once per length under a global lock (FFTW's planner is
/// not reentrant) and executed through the new-array interface, which is.
/// FFTW_UNALIGNED lets any std::vector buffer be passed at execution time.
class PlanPair {
public:
    explicit PlanPair(std::size_t n) : n_(n) {
        std::vector<double> real(n);
        std::vector<std::complex<double>> spec(n / 2 + 1);
        auto* c = reinterpret_cast<fftw_complex*>(spec.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(), c, flags);
        backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, real.data(),
                                         flags | FFTW_DESTROY_INPUT);
    }
    PlanPair(const PlanPair&) = delete;
    PlanPair& operator=(const PlanPair&) = delete;
    ~PlanPair() {
        fftw_destroy_plan(backward_);
        fftw_destroy_plan(forward_);
    }

    std::size_t size() const { return n_; }

    void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
        // r2c does not modify its input; the cast only satisfies the C API.
        fftw_execute_dft_r2c(forward_, const_cast<double*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()));
    }

    /// Destroys `in`.
    void backward(std::span<std::complex<double>> in, std::span<double> out) const {
        fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in.data()),
                             out.data());
    }

private:
    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

inline const PlanPair& plans_for(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<PlanPair>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<PlanPair>(n);
    return *slot;
}

/// Normalized forward transform: out[k] = (1/N) sum_j in[j] exp(-2 pi i k j / N),
/// for k = 0..N/2.
inline std::vector<std::complex<double>> forward(std::span<const double> in) {
    const std::size_t n = in.size();
    std::vector<std::complex<double>> out(n / 2 + 1);
    plans_for(n).forward(in, out);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& c : out) c *= scale;
    return out;
}

/// Inverse of forward() for a length-n real signal; `half` holds k = 0..n/2.
inline std::vector<double> backward(std::vector<std::complex<double>> half, std::size_t n) {
    std::vector<double> out(n);
    plans_for(n).backward(half, out);
    return out;
}

}  // namespace muhs::fft

#endif  // MUHS_FFT_HPP
