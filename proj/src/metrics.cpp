#include "bonnet/metrics.hpp"

#include <cmath>

namespace bonnet {

double mse(const Image& u, const Image& u_true) {
  require_same_grid(u, u_true, "mse");
  return (u.values - u_true.values).squaredNorm();
}

double psnr(const Image& u, const Image& u_true) {
  const double err = mse(u, u_true);
  const double peak = u_true.values.maxCoeff();
  if (!(peak > 0.0)) throw DomainError("psnr: ground truth has no positive peak");
  if (err == 0.0) return kPsnrInfinite;
  const double per_pixel = err / static_cast<double>(u_true.values.size());
  return 10.0 * std::log10(peak * peak / per_pixel);
}

namespace {

Eigen::VectorXd gaussian_taps(const SsimOptions& opts) {
  Eigen::VectorXd w(opts.window);
  const double c = 0.5 * (opts.window - 1);
  for (int i = 0; i < opts.window; ++i) w[i] = std::exp(-0.5 * std::pow((i - c) / opts.sigma, 2));
  return w / w.sum();
}

// Separable 'valid' filtering of an n x n row-major image.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& img, const Eigen::VectorXd& w) {
  const Eigen::Index n = img.rows();
  const Eigen::Index k = w.size();
  const Eigen::Index out = n - k + 1;
  Eigen::MatrixXd rows(n, out);
  for (Eigen::Index j = 0; j < out; ++j) rows.col(j) = img.middleCols(j, k) * w;
  Eigen::MatrixXd res(out, out);
  for (Eigen::Index i = 0; i < out; ++i) res.row(i) = w.transpose() * rows.middleRows(i, k);
  return res;
}

Eigen::MatrixXd as_matrix(const Image& u) {
  const int n = u.grid.n();
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(u.values.data(), n,
                                                                                                  n);
}

}  // namespace

double ssim(const Image& a, const Image& b, double data_range, const SsimOptions& opts) {
  require_same_grid(a, b, "ssim");
  if (!(data_range > 0.0) || !std::isfinite(data_range)) throw DomainError("ssim: degenerate dynamic range");
  if (opts.window < 1 || !(opts.sigma > 0.0)) throw DomainError("ssim: invalid window");
  if (a.grid.n() < opts.window)
    throw DimensionError("ssim: image side " + std::to_string(a.grid.n()) + " smaller than window " +
                         std::to_string(opts.window));
  const auto w = gaussian_taps(opts);
  const Eigen::MatrixXd x = as_matrix(a);
  const Eigen::MatrixXd y = as_matrix(b);
  const Eigen::MatrixXd mx = filter_valid(x, w);
  const Eigen::MatrixXd my = filter_valid(y, w);
  const Eigen::MatrixXd sxx = filter_valid(x.cwiseProduct(x), w) - mx.cwiseProduct(mx);
  const Eigen::MatrixXd syy = filter_valid(y.cwiseProduct(y), w) - my.cwiseProduct(my);
  const Eigen::MatrixXd sxy = filter_valid(x.cwiseProduct(y), w) - mx.cwiseProduct(my);
  const double c1 = std::pow(opts.k1 * data_range, 2);
  const double c2 = std::pow(opts.k2 * data_range, 2);
  const Eigen::ArrayXXd num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
  const Eigen::ArrayXXd den =
      (mx.array().square() + my.array().square() + c1) * (sxx.array() + syy.array() + c2);
  return (num / den).mean();
}

double ssim(const Image& u, const Image& u_true, const SsimOptions& opts) {
  const double range = u_true.values.maxCoeff() - u_true.values.minCoeff();
  if (!(range > 0.0)) throw DomainError("ssim: ground truth has zero dynamic range");
  return ssim(u, u_true, range, opts);
}

MetricsReport evaluate_metrics(std::span<const Image> recon, std::span<const Image> truth,
                               std::span<const std::string> ids) {
  if (recon.size() != truth.size()) throw DimensionError("evaluate_metrics: recon/truth count mismatch");
  if (!ids.empty() && ids.size() != recon.size()) throw DimensionError("evaluate_metrics: id count mismatch");
  if (recon.empty()) throw DimensionError("evaluate_metrics: no samples");
  MetricsReport report;
  report.average.id = "average";
  for (std::size_t i = 0; i < recon.size(); ++i) {
    SampleMetrics m{ids.empty() ? std::to_string(i) : ids[i], mse(recon[i], truth[i]), psnr(recon[i], truth[i]),
                    ssim(recon[i], truth[i])};
    report.average.mse += m.mse;
    report.average.psnr += m.psnr;
    report.average.ssim += m.ssim;
    report.samples.push_back(std::move(m));
  }
  const double count = static_cast<double>(recon.size());
  report.average.mse /= count;
  report.average.psnr /= count;
  report.average.ssim /= count;
  return report;
}

}  // namespace bonnet
