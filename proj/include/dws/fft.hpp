#pragma once

// Thin FFTW wrapper with a per-size plan cache. All transforms are
// complex-to-complex; inverse transforms are scaled by 1/N.

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace dws {

using Cplx = std::complex<double>;
using Signal = std::vector<Cplx>;

namespace detail {

struct FftPlan {
    fftw_plan plan = nullptr;
    fftw_complex* buf = nullptr;
    int n = 0;

    FftPlan(int n_, int sign) : n(n_) {
        buf = fftw_alloc_complex(static_cast<size_t>(n));
        plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        if (plan) fftw_destroy_plan(plan);
        if (buf) fftw_free(buf);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
};

inline std::mutex& fft_mutex() {
    static std::mutex m;
    return m;
}

inline FftPlan& cached_plan(int n, int sign) {
    static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it == cache.end()) {
        it = cache.emplace(key, std::make_unique<FftPlan>(n, sign)).first;
    }
    return *it->second;
}

inline void transform(Cplx* data, int n, int sign) {
    if (n <= 0) throw std::invalid_argument("fft: empty input");
    std::lock_guard<std::mutex> lock(fft_mutex());
    FftPlan& p = cached_plan(n, sign);
    auto* buf = reinterpret_cast<Cplx*>(p.buf);
    std::copy(data, data + n, buf);
    fftw_execute(p.plan);
    std::copy(buf, buf + n, data);
    if (sign == FFTW_BACKWARD) {
        const double scale = 1.0 / n;
        for (int i = 0; i < n; ++i) data[i] *= scale;
    }
}

}  // namespace detail

inline void fft_inplace(Signal& x) {
    detail::transform(x.data(), static_cast<int>(x.size()), FFTW_FORWARD);
}

inline void ifft_inplace(Signal& x) {
    detail::transform(x.data(), static_cast<int>(x.size()), FFTW_BACKWARD);
}

inline Signal fft(Signal x) {
    fft_inplace(x);
    return x;
}

inline Signal ifft(Signal x) {
    ifft_inplace(x);
    return x;
}

}  // namespace dws
