#pragma once

// Synthetic scenes with known ground truth plus brute-force oracles. Nothing
// here calls into the segmentation code, so the oracles stay independent of
// the implementation they check.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "physem/image.hpp"
#include "physem/types.hpp"

namespace physem::testing {

/// Image plus the class index of every pixel.
struct Scene {
    ImagePlane image;
    std::vector<int> truth;
};

inline Scene make_scene(int width, int height, const std::function<int(int, int)>& klass,
                        const std::vector<std::uint8_t>& values) {
    Scene s{ImagePlane(width, height), std::vector<int>(static_cast<std::size_t>(width) * height)};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int c = klass(x, y);
            s.truth[static_cast<std::size_t>(y) * width + x] = c;
            s.image.at(x, y) = values[c];
        }
    }
    return s;
}

inline Scene constant_scene(int width, int height, std::uint8_t value) {
    return make_scene(width, height, [](int, int) { return 0; }, {value});
}

/// Two flat regions split at column `split` (left = class 0).
inline Scene halves_scene(int width, int height, int split, std::uint8_t left, std::uint8_t right) {
    return make_scene(width, height, [split](int x, int) { return x < split ? 0 : 1; }, {left, right});
}

/// side x side grid of flat tiles; tile (i, j) uses palette[(i + 2 j) mod 5],
/// so 4-adjacent tiles always differ by at least one palette step.
inline Scene tile_grid_scene(int size, int side) {
    static const std::vector<std::uint8_t> palette = {20, 70, 120, 170, 220};
    std::vector<std::uint8_t> values;
    for (int t = 0; t < side * side; ++t) values.push_back(palette[(t % side + 2 * (t / side)) % 5]);
    return make_scene(size, size,
                      [&](int x, int y) {
                          const int i = std::min(side - 1, x * side / size);
                          const int j = std::min(side - 1, y * side / size);
                          return j * side + i;
                      },
                      values);
}

/// Bright disk in the upper third over a mid-gray field, dark band across the
/// bottom third. Classes: 0 field, 1 disk, 2 band.
inline Scene sky_scene(int size, double cx, double cy, double radius, int band_top,
                       std::uint8_t field = 128, std::uint8_t disk = 230, std::uint8_t band = 30) {
    return make_scene(size, size,
                      [=](int x, int y) {
                          if (y >= band_top) return 2;
                          const double dx = x - cx, dy = y - cy;
                          return dx * dx + dy * dy <= radius * radius ? 1 : 0;
                      },
                      {field, disk, band});
}

/// Adds integer noise uniform in [-amplitude, amplitude], clamped to [0, 255].
inline ImagePlane add_noise(const ImagePlane& in, int amplitude, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> noise(-amplitude, amplitude);
    ImagePlane out = in;
    for (auto& v : out.pixels()) v = static_cast<std::uint8_t>(std::clamp(int{v} + noise(rng), 0, 255));
    return out;
}

inline ImagePlane random_plane(int width, int height, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> value(0, 255);
    ImagePlane out(width, height);
    for (auto& v : out.pixels()) v = static_cast<std::uint8_t>(value(rng));
    return out;
}

/// Brute-force 4-connected components: neighbours join when `joined(a, b)`.
/// Component ids start at 1 in raster order of the first pixel.
inline std::vector<int> connected_components(const ImagePlane& plane,
                                             const std::function<bool(int, int)>& joined) {
    const int w = plane.width(), h = plane.height();
    std::vector<int> comp(plane.size(), 0);
    int next = 1;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (comp[static_cast<std::size_t>(sy) * w + sx]) continue;
            std::vector<std::pair<int, int>> queue{{sx, sy}};
            comp[static_cast<std::size_t>(sy) * w + sx] = next;
            for (std::size_t head = 0; head < queue.size(); ++head) {
                const auto [x, y] = queue[head];
                const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (const auto& d : dirs) {
                    const int nx = x + d[0], ny = y + d[1];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    int& c = comp[static_cast<std::size_t>(ny) * w + nx];
                    if (c == 0 && joined(plane.at(x, y), plane.at(nx, ny))) {
                        c = next;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            ++next;
        }
    }
    return comp;
}

/// True when both labelings induce the same partition (a bijection between ids).
template <typename A, typename B>
bool same_partition(const std::vector<A>& a, const std::vector<B>& b) {
    if (a.size() != b.size()) return false;
    std::map<A, B> forward;
    std::map<B, A> backward;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto [f, f_new] = forward.emplace(a[i], b[i]);
        const auto [r, r_new] = backward.emplace(b[i], a[i]);
        if (f->second != b[i] || r->second != a[i]) return false;
    }
    return true;
}

inline std::size_t distinct(const std::vector<RegionId>& labels) {
    std::vector<RegionId> v = labels;
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

/// Fraction of pixels whose region's majority truth class equals their own
/// truth class. Pixels with mask[i] == false are ignored.
inline double pixel_agreement(const std::vector<RegionId>& labels, const std::vector<int>& truth,
                              const std::vector<bool>& mask = {}) {
    std::map<RegionId, std::map<int, std::size_t>> votes;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (mask.empty() || mask[i]) ++votes[labels[i]][truth[i]];
    }
    std::map<RegionId, int> majority;
    for (const auto& [id, counts] : votes) {
        majority[id] = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                           return a.second < b.second;
                       })->first;
    }
    std::size_t good = 0, total = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        ++total;
        if (majority[labels[i]] == truth[i]) ++good;
    }
    return total == 0 ? 1.0 : static_cast<double>(good) / static_cast<double>(total);
}

/// Mask that drops every pixel within `band` pixels (Chebyshev) of a class boundary.
inline std::vector<bool> interior_mask(const std::vector<int>& truth, int width, int height, int band) {
    std::vector<bool> keep(truth.size(), true);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int c = truth[static_cast<std::size_t>(y) * width + x];
            for (int dy = -band; dy <= band && keep[static_cast<std::size_t>(y) * width + x]; ++dy) {
                for (int dx = -band; dx <= band; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                    if (truth[static_cast<std::size_t>(ny) * width + nx] != c) {
                        keep[static_cast<std::size_t>(y) * width + x] = false;
                        break;
                    }
                }
            }
        }
    }
    return keep;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("physem-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace physem::testing
