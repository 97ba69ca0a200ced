#include "spdelab/dst.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdelab {

namespace {
constexpr double kPi = std::numbers::pi;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

int SineTransform::fast_size_at_least(int n) {
    int m = 2;
    while (m - 1 < n) m *= 2;
    return m - 1;
}

SineTransform::SineTransform(int size) : size_(size) {
    if (size < 1) throw std::invalid_argument("SineTransform: size must be >= 1");
    use_fft_ = is_pow2(size + 1);
    if (use_fft_) {
        const int L = 2 * (size_ + 1);
        buffer_.resize(L);
        twiddle_.resize(L / 2);
        for (int i = 0; i < L / 2; ++i)
            twiddle_[i] = std::polar(1.0, -2.0 * kPi * i / L);
    } else {
        sine_matrix_.resize(size_, size_);
        for (int j = 1; j <= size_; ++j)
            for (int g = 1; g <= size_; ++g)
                sine_matrix_(j - 1, g - 1) = std::sin(kPi * j * g / (size_ + 1));
    }
}

void SineTransform::fft(std::vector<std::complex<double>>& a) const {
    const int n = static_cast<int>(a.size());
    for (int i = 1, rev = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; rev & bit; bit >>= 1) rev ^= bit;
        rev ^= bit;
        if (i < rev) std::swap(a[i], a[rev]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int stride = n / len;
        for (int i = 0; i < n; i += len) {
            for (int d = 0; d < len / 2; ++d) {
                const std::complex<double> w = twiddle_[d * stride];
                const std::complex<double> u = a[i + d];
                const std::complex<double> v = a[i + d + len / 2] * w;
                a[i + d] = u + v;
                a[i + d + len / 2] = u - v;
            }
        }
    }
}

void SineTransform::forward(const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    if (in.size() != size_) throw std::invalid_argument("SineTransform: bad length");
    out.resize(size_);
    if (!use_fft_) {
        out.noalias() = sine_matrix_ * in;
        return;
    }
    const int L = 2 * (size_ + 1);
    buffer_[0] = 0.0;
    buffer_[size_ + 1] = 0.0;
    for (int g = 1; g <= size_; ++g) {
        buffer_[g] = in[g - 1];
        buffer_[L - g] = -in[g - 1];
    }
    fft(buffer_);
    for (int j = 1; j <= size_; ++j) out[j - 1] = -0.5 * buffer_[j].imag();
}

}  // namespace spdelab
