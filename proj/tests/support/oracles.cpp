#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace oracle {

double psnr(const Image& a, const Image& b) {
  double sum = 0.0;
  int n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        sum += d * d;
        ++n;
      }
    }
  }
  const double mse = sum / n;
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<std::vector<double>> window(double sigma, int r) {
  std::vector<std::vector<double>> w(2 * r + 1, std::vector<double>(2 * r + 1));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    for (int j = -r; j <= r; ++j) {
      w[i + r][j + r] = std::exp(-(i * i + j * j) / (2 * sigma * sigma));
      total += w[i + r][j + r];
    }
  }
  for (auto& row : w) {
    for (double& v : row) v /= total;
  }
  return w;
}

// Mean SSIM map and mean contrast-structure map of one channel.
std::pair<double, double> ssim_channel(const Image& a, const Image& b, int c, double sigma, int r) {
  const auto w = window(sigma, r);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double s_sum = 0.0, cs_sum = 0.0;
  int n = 0;
  for (int y = r; y < a.height() - r; ++y) {
    for (int x = r; x < a.width() - r; ++x) {
      double ma = 0, mb = 0;
      for (int i = -r; i <= r; ++i) {
        for (int j = -r; j <= r; ++j) {
          ma += w[i + r][j + r] * a.at(x + j, y + i, c);
          mb += w[i + r][j + r] * b.at(x + j, y + i, c);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int i = -r; i <= r; ++i) {
        for (int j = -r; j <= r; ++j) {
          const double da = a.at(x + j, y + i, c) - ma;
          const double db = b.at(x + j, y + i, c) - mb;
          va += w[i + r][j + r] * da * da;
          vb += w[i + r][j + r] * db * db;
          cov += w[i + r][j + r] * da * db;
        }
      }
      const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      const double cs = (2 * cov + c2) / (va + vb + c2);
      s_sum += l * cs;
      cs_sum += cs;
      ++n;
    }
  }
  return {s_sum / n, cs_sum / n};
}

Image halve(const Image& img) {
  Image out(img.width() / 2, img.height() / 2, img.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = (img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                           img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c)) /
                          4.0;
      }
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, double sigma, int radius) {
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) total += ssim_channel(a, b, c, sigma, radius).first;
  return total / a.channels();
}

double ms_ssim(const Image& a, const Image& b, const std::vector<double>& weights) {
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    Image x = a.channel(c), y = b.channel(c);
    double score = 1.0;
    for (std::size_t s = 0; s < weights.size(); ++s) {
      const auto [full, cs] = ssim_channel(x, y, 0, 1.5, 5);
      const double term = s + 1 == weights.size() ? full : cs;
      score *= std::pow(std::max(term, 0.0), weights[s]);
      if (s + 1 < weights.size()) {
        x = halve(x);
        y = halve(y);
      }
    }
    total += score;
  }
  return total / a.channels();
}

Image blur2d(const Image& img, double sigma) {
  if (sigma == 0) return img;
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<std::vector<double>> w(2 * r + 1, std::vector<double>(2 * r + 1));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    for (int j = -r; j <= r; ++j) total += w[i + r][j + r] = std::exp(-(i * i + j * j) / (2 * sigma * sigma));
  }
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) {
          for (int j = -r; j <= r; ++j) {
            const int yy = std::clamp(y + i, 0, img.height() - 1);
            const int xx = std::clamp(x + j, 0, img.width() - 1);
            s += w[i + r][j + r] * img.at(xx, yy, c);
          }
        }
        out.at(x, y, c) = s / total;
      }
    }
  }
  return out;
}

bool bilinear(const Image& img, double x, double y, int c, double& out) {
  const double eps = 1e-9;
  if (!(x >= -eps && y >= -eps && x <= img.width() - 1 + eps && y <= img.height() - 1 + eps)) return false;
  x = std::clamp(x, 0.0, img.width() - 1.0);
  y = std::clamp(y, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0, fy = y - y0;
  out = (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
        fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
  return true;
}

Image warp_inverse_map(const Image& img, const std::array<double, 9>& m) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double w = m[6] * x + m[7] * y + m[8];
      const double sx = (m[0] * x + m[1] * y + m[2]) / w;
      const double sy = (m[3] * x + m[4] * y + m[5]) / w;
      for (int c = 0; c < img.channels(); ++c) {
        double v = 0.0;
        if (bilinear(img, sx, sy, c, v)) out.at(x, y, c) = v;
      }
    }
  }
  return out;
}

Image warp_field(const Image& img, const std::vector<rainforge::Vec2>& field) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto& d = field[static_cast<std::size_t>(y) * img.width() + x];
      for (int c = 0; c < img.channels(); ++c) {
        double v = 0.0;
        if (bilinear(img, x + d.x, y + d.y, c, v)) out.at(x, y, c) = v;
      }
    }
  }
  return out;
}

std::vector<double> capsule(int width, int height, double ax, double ay, double bx, double by,
                            double thickness, double opacity) {
  std::vector<double> out(static_cast<std::size_t>(width) * height, 0.0);
  const double len = std::hypot(bx - ax, by - ay);
  const double ux = len > 0 ? (bx - ax) / len : 0.0;
  const double uy = len > 0 ? (by - ay) / len : 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Distance along and across the segment axis.
      const double along = (x - ax) * ux + (y - ay) * uy;
      double d;
      if (len > 0 && along >= 0 && along <= len) {
        d = std::abs(-(x - ax) * uy + (y - ay) * ux);
      } else {
        d = std::min(std::hypot(x - ax, y - ay), std::hypot(x - bx, y - by));
      }
      const double cov = std::min(1.0, std::max(0.0, thickness / 2 + 0.5 - d));
      out[static_cast<std::size_t>(y) * width + x] = std::min(1.0, opacity * cov);
    }
  }
  return out;
}

std::array<std::size_t, 3> hamilton(std::size_t total, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> seats{};
  std::multimap<double, int, std::greater<>> by_remainder;
  std::size_t given = 0;
  for (int i = 0; i < 3; ++i) {
    const double q = ratios[i] * total;
    seats[i] = static_cast<std::size_t>(q + 1e-9);
    given += seats[i];
    by_remainder.emplace(q - seats[i], i);
  }
  for (auto it = by_remainder.begin(); given < total; ++it, ++given) ++seats[it->second];
  return seats;
}

std::vector<Match> brute_force_match(const std::vector<rainforge::Keypoint>& a,
                                     const std::vector<rainforge::Keypoint>& b, double ratio) {
  std::map<int, Match> best;  // by target
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<std::pair<double, int>> d;
    for (std::size_t j = 0; j < b.size(); ++j) {
      double s = 0.0;
      for (int k = 0; k < 128; ++k) {
        const double diff = double(a[i].descriptor[k]) - double(b[j].descriptor[k]);
        s += diff * diff;
      }
      d.emplace_back(std::sqrt(s), static_cast<int>(j));
    }
    if (d.empty()) continue;
    std::sort(d.begin(), d.end());
    double r;
    if (d.size() == 1) {
      r = 0.0;
    } else if (d[1].first == 0.0) {
      r = 1.0;
    } else {
      r = d[0].first / d[1].first;
    }
    if (!(r < ratio)) continue;
    const int t = d[0].second;
    auto it = best.find(t);
    if (it == best.end() || r < it->second.ratio) best[t] = {static_cast<int>(i), t, r};
  }
  std::vector<Match> out;
  for (const auto& [t, m] : best) out.push_back(m);
  std::sort(out.begin(), out.end(), [](const Match& x, const Match& y) { return x.a < y.a; });
  return out;
}

}  // namespace oracle
