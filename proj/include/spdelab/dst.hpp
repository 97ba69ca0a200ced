#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

namespace spdelab {

/// DST-I of length G: out_j = Sum_{g=1}^G v_g sin(pi j g / (G+1)).
/// Runs on a radix-2 FFT when G+1 is a power of two, otherwise on the
/// precomputed sine matrix. Not thread-shared; each worker owns a plan.
class SineTransform {
  public:
    explicit SineTransform(int size);

    int size() const { return size_; }
    static int fast_size_at_least(int n);  // smallest 2^m - 1 >= n

    void forward(const Eigen::VectorXd& in, Eigen::VectorXd& out);

  private:
    int size_;
    bool use_fft_;
    std::vector<std::complex<double>> buffer_;   // length 2(G+1)
    std::vector<std::complex<double>> twiddle_;  // FFT twiddles
    Eigen::MatrixXd sine_matrix_;                // fallback path

    void fft(std::vector<std::complex<double>>& a) const;
};

}  // namespace spdelab
