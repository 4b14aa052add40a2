#include "physem/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <tuple>

#include "physem/error.hpp"
#include "physem/kernels.hpp"

namespace physem {

namespace {

template <typename Fn>
void for_each_neighbor(std::size_t index, int width, int height, Fn&& fn) {
    const int x = static_cast<int>(index % static_cast<std::size_t>(width));
    const int y = static_cast<int>(index / static_cast<std::size_t>(width));
    if (y > 0) fn(index - width);
    if (x > 0) fn(index - 1);
    if (x + 1 < width) fn(index + 1);
    if (y + 1 < height) fn(index + width);
}

RegionId max_label(std::span<const RegionId> labels) {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

std::map<RegionId, RegionStats> to_map(const std::vector<RegionStats>& table) {
    std::map<RegionId, RegionStats> out;
    for (std::size_t id = 1; id < table.size(); ++id) {
        if (table[id].count > 0) out.emplace(static_cast<RegionId>(id), table[id]);
    }
    return out;
}

// Recounts stats and rewrites the intensity map with the final region means.
void finalize(SegmentationState& state, const ImagePlane& raw) {
    const auto table = kernels::accumulate(state.labels, raw.pixels(), max_label(state.labels));
    std::vector<double> means(table.size());
    for (std::size_t id = 0; id < table.size(); ++id) means[id] = table[id].mean();

    const auto n = static_cast<std::ptrdiff_t>(state.labels.size());
    const RegionId* labels = state.labels.data();
    double* intensity = state.intensity.data();
#pragma omp parallel for schedule(static) if (n > (1 << 14))
    for (std::ptrdiff_t i = 0; i < n; ++i) intensity[i] = means[labels[i]];

    state.stats = to_map(table);
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t v) {
        while (parent_[v] != v) {
            parent_[v] = parent_[parent_[v]];
            v = parent_[v];
        }
        return v;
    }

    // The smaller root survives so representatives stay deterministic.
    std::size_t unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return a;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        return a;
    }

private:
    std::vector<std::size_t> parent_;
};

// Fuses 4-adjacent regions whose means differ by at most `threshold`,
// closest pair first (ties: lowest ids); the lower id of each pair survives.
// `table` is indexed by region id and is updated along with `labels`.
std::size_t fuse_similar(std::vector<RegionId>& labels, int w, std::vector<RegionStats>& table,
                         double threshold) {
    std::vector<std::set<RegionId>> adjacent(table.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const RegionId a = labels[i];
        const std::size_t x = i % static_cast<std::size_t>(w);
        if (x + 1 < static_cast<std::size_t>(w) && labels[i + 1] != a) {
            adjacent[a].insert(labels[i + 1]);
            adjacent[labels[i + 1]].insert(a);
        }
        if (i + w < labels.size() && labels[i + w] != a) {
            adjacent[a].insert(labels[i + w]);
            adjacent[labels[i + w]].insert(a);
        }
    }

    using Edge = std::tuple<double, RegionId, RegionId>;  // (mean gap, lower id, higher id)
    auto edge = [&](RegionId a, RegionId b) {
        if (b < a) std::swap(a, b);
        return Edge{std::abs(table[a].mean() - table[b].mean()), a, b};
    };
    std::set<Edge> edges;
    for (RegionId r = 0; r < adjacent.size(); ++r) {
        for (const RegionId s : adjacent[r]) {
            if (r < s) edges.insert(edge(r, s));
        }
    }

    std::vector<RegionId> target(table.size());
    std::iota(target.begin(), target.end(), RegionId{0});
    std::size_t fused = 0;
    while (!edges.empty() && std::get<0>(*edges.begin()) <= threshold) {
        const auto [gap, keep, gone] = *edges.begin();
        for (const RegionId s : adjacent[keep]) edges.erase(edge(keep, s));
        for (const RegionId s : adjacent[gone]) edges.erase(edge(gone, s));

        table[keep].count += table[gone].count;
        table[keep].sum += table[gone].sum;
        table[gone] = {};
        target[gone] = keep;
        ++fused;

        std::set<RegionId> merged = std::move(adjacent[keep]);
        merged.insert(adjacent[gone].begin(), adjacent[gone].end());
        merged.erase(keep);
        merged.erase(gone);
        for (const RegionId s : merged) {
            adjacent[s].erase(gone);
            adjacent[s].insert(keep);
        }
        adjacent[gone].clear();
        adjacent[keep] = std::move(merged);
        for (const RegionId s : adjacent[keep]) edges.insert(edge(keep, s));
    }
    if (fused == 0) return 0;

    // Resolve chains (c -> b -> a); every fusion points at a lower id.
    for (RegionId id = 0; id < target.size(); ++id) target[id] = target[target[id]];
    const auto n = static_cast<std::ptrdiff_t>(labels.size());
    RegionId* out = labels.data();
#pragma omp parallel for schedule(static) if (n > (1 << 14))
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = target[out[i]];
    return fused;
}

// Uncommitting pixels can cut a region in two. The largest piece keeps the
// id (first in raster order on ties); other pieces of at least min_seed pixels
// get fresh ids and smaller ones join the adjacent region of closest mean.
// Returns the number of pieces that left their original region.
std::size_t split_disconnected(std::vector<RegionId>& labels, int w, int h, std::span<const std::uint8_t> px,
                               std::vector<RegionStats>& table, RegionId& next_id, int min_seed) {
    struct Piece {
        RegionId id;
        std::vector<std::size_t> pixels;
        RegionStats stats;
    };
    std::vector<std::uint8_t> visited(labels.size(), 0);
    std::vector<std::vector<Piece>> pieces(table.size());
    for (std::size_t start = 0; start < labels.size(); ++start) {
        if (visited[start]) continue;
        const RegionId id = labels[start];
        Piece piece{id, {start}, {}};
        visited[start] = 1;
        for (std::size_t head = 0; head < piece.pixels.size(); ++head) {
            const std::size_t p = piece.pixels[head];
            piece.stats.add(px[p]);
            for_each_neighbor(p, w, h, [&](std::size_t q) {
                if (!visited[q] && labels[q] == id) {
                    visited[q] = 1;
                    piece.pixels.push_back(q);
                }
            });
        }
        pieces[id].push_back(std::move(piece));
    }

    std::vector<Piece> strays;
    for (auto& list : pieces) {
        if (list.size() < 2) continue;
        const auto largest = std::max_element(list.begin(), list.end(), [](const Piece& a, const Piece& b) {
            return a.pixels.size() < b.pixels.size();
        });
        for (auto it = list.begin(); it != list.end(); ++it) {
            if (it == largest) continue;
            table[it->id].count -= it->stats.count;
            table[it->id].sum -= it->stats.sum;
            if (it->pixels.size() >= static_cast<std::size_t>(min_seed)) {
                const RegionId fresh = next_id++;
                for (const std::size_t p : it->pixels) labels[p] = fresh;
                table.push_back(it->stats);
            } else {
                strays.push_back(std::move(*it));
            }
        }
    }

    std::size_t moved = 0;
    for (const auto& list : pieces) moved += list.empty() ? 0 : list.size() - 1;
    for (Piece& piece : strays) {
        RegionId best = kUncommitted;
        double best_gap = std::numeric_limits<double>::infinity();
        for (const std::size_t p : piece.pixels) {
            for_each_neighbor(p, w, h, [&](std::size_t q) {
                const RegionId r = labels[q];
                if (r == piece.id) return;
                const double gap = std::abs(piece.stats.mean() - table[r].mean());
                if (gap < best_gap || (gap == best_gap && r < best)) {
                    best_gap = gap;
                    best = r;
                }
            });
        }
        if (best == kUncommitted) {
            best = next_id++;
            table.emplace_back();
        }
        for (const std::size_t p : piece.pixels) labels[p] = best;
        table[best].count += piece.stats.count;
        table[best].sum += piece.stats.sum;
    }
    return moved;
}

}  // namespace

void SegConfig::validate() const {
    if (!(merge_threshold > 0.0)) fail(ErrorKind::InvalidInput, "merge_threshold must be positive");
    if (!(deviation_delta > 0.0)) fail(ErrorKind::InvalidInput, "deviation_delta must be positive");
    if (min_seed_size < 1) fail(ErrorKind::InvalidInput, "min_seed_size must be positive");
    if (max_refine_iters < 1) fail(ErrorKind::InvalidInput, "max_refine_iters must be positive");
}

std::size_t SegmentationState::uncommitted_count() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kUncommitted));
}

SegmentationState segment_top(const ImagePlane& top, const SegConfig& cfg, std::size_t level) {
    cfg.validate();
    if (top.empty()) fail(ErrorKind::InvalidInput, "cannot segment an empty plane");

    const int w = top.width(), h = top.height();
    const std::size_t n = top.size();
    const auto px = top.pixels();

    // Pixel-level growing: 4-neighbours within merge_threshold share a component.
    DisjointSets pixels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t x = i % w;
        if (x + 1 < static_cast<std::size_t>(w) && std::abs(int{px[i]} - int{px[i + 1]}) <= cfg.merge_threshold) {
            pixels.unite(i, i + 1);
        }
        if (i + w < n && std::abs(int{px[i]} - int{px[i + w]}) <= cfg.merge_threshold) pixels.unite(i, i + w);
    }

    // Provisional ids in raster order of each component's first pixel.
    std::vector<RegionId> labels(n, kUncommitted);
    std::vector<RegionId> component_id(n, kUncommitted);
    RegionId components = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = pixels.find(i);
        if (component_id[root] == kUncommitted) component_id[root] = ++components;
        labels[i] = component_id[root];
    }
    auto table = kernels::accumulate(labels, px, components);
    fuse_similar(labels, w, table, cfg.merge_threshold);

    // The lower id survives each fusion, so surviving ids are still ordered by
    // first pixel; compact them to 1..R.
    SegmentationState state;
    state.level = level;
    state.width = w;
    state.height = h;
    state.labels.assign(n, kUncommitted);
    state.intensity.assign(n, 0.0);

    std::vector<RegionId> relabel(static_cast<std::size_t>(components) + 1, kUncommitted);
    RegionId next = 1;
    for (std::size_t i = 0; i < n; ++i) {
        RegionId& id = relabel[labels[i]];
        if (id == kUncommitted) id = next++;
        state.labels[i] = id;
    }
    state.next_id = next;
    finalize(state, top);
    return state;
}

SegmentationState expand_maps(const SegmentationState& state, const ImagePlane& target) {
    if (state.labels.size() != state.intensity.size()) fail(ErrorKind::InvalidInput, "inconsistent state maps");
    SegmentationState out;
    out.level = state.level > 0 ? state.level - 1 : 0;
    out.width = target.width();
    out.height = target.height();
    out.labels = kernels::expand(std::span<const RegionId>(state.labels), state.width, state.height, target.width(),
                                 target.height());
    out.intensity = kernels::expand(std::span<const double>(state.intensity), state.width, state.height,
                                    target.width(), target.height());
    out.next_id = state.next_id;
    out.stats = recount_stats(out, target);
    return out;
}

std::vector<std::size_t> mark_deviants(const SegmentationState& provisional, const ImagePlane& raw,
                                       const SegConfig& cfg) {
    if (provisional.width != raw.width() || provisional.height != raw.height()) {
        fail(ErrorKind::InvalidInput, "mark_deviants: plane does not match the state");
    }
    return kernels::deviants(raw.pixels(), provisional.intensity, cfg.deviation_delta);
}

void uncommit(SegmentationState& state, std::span<const std::size_t> pixels, const ImagePlane& raw) {
    for (const std::size_t i : pixels) {
        if (i >= state.labels.size()) fail(ErrorKind::InvalidInput, "uncommit: pixel index out of range");
        state.labels[i] = kUncommitted;
    }
    state.stats = recount_stats(state, raw);
}

SegmentationState refine(SegmentationState state, const ImagePlane& raw, const SegConfig& cfg,
                         RefineReport* report) {
    cfg.validate();
    if (state.width != raw.width() || state.height != raw.height() || state.labels.size() != raw.size()) {
        fail(ErrorKind::InvalidInput, "refine: plane does not match the state");
    }
    const int w = state.width, h = state.height;
    const auto px = raw.pixels();
    auto& labels = state.labels;

    RefineReport local;
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kUncommitted) pending.push_back(i);
    }
    local.deviants = pending.size();
    if (pending.empty()) {
        state.stats = recount_stats(state, raw);
        if (report) *report = local;
        return state;
    }

    state.next_id = std::max(state.next_id, max_label(labels) + 1);
    std::vector<RegionStats> stats = kernels::accumulate(labels, px, state.next_id - 1);

    // Adoption sweeps. Labels and means are read from the state at the start
    // of the sweep and written back only at its end.
    std::vector<std::pair<std::size_t, RegionId>> adoptions;
    for (int sweep = 0; sweep < cfg.max_refine_iters && !pending.empty(); ++sweep) {
        adoptions.clear();
        for (const std::size_t p : pending) {
            RegionId best = kUncommitted;
            double best_gap = std::numeric_limits<double>::infinity();
            for_each_neighbor(p, w, h, [&](std::size_t q) {
                const RegionId r = labels[q];
                if (r == kUncommitted) return;
                const double gap = std::abs(static_cast<double>(px[p]) - stats[r].mean());
                if (gap < best_gap || (gap == best_gap && r < best)) {
                    best_gap = gap;
                    best = r;
                }
            });
            if (best != kUncommitted && best_gap <= cfg.deviation_delta) adoptions.emplace_back(p, best);
        }
        ++local.sweeps;
        if (adoptions.empty()) break;

        for (const auto& [p, r] : adoptions) {
            labels[p] = r;
            stats[r].add(px[p]);
        }
        local.adopted += adoptions.size();
        std::erase_if(pending, [&](std::size_t p) { return labels[p] != kUncommitted; });
    }

    // Leftover blobs: large ones seed new regions, small ones join the
    // adjacent region with the closest mean.
    if (!pending.empty()) {
        struct Blob {
            std::vector<std::size_t> pixels;
            RegionStats stats;
        };
        std::vector<Blob> small;
        std::vector<std::uint8_t> visited(labels.size(), 0);
        std::vector<std::size_t> stack;
        for (const std::size_t start : pending) {
            if (visited[start]) continue;
            Blob blob;
            visited[start] = 1;
            stack.push_back(start);
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                blob.pixels.push_back(p);
                blob.stats.add(px[p]);
                for_each_neighbor(p, w, h, [&](std::size_t q) {
                    if (labels[q] == kUncommitted && !visited[q]) {
                        visited[q] = 1;
                        stack.push_back(q);
                    }
                });
            }
            if (blob.pixels.size() >= static_cast<std::size_t>(cfg.min_seed_size)) {
                const RegionId id = state.next_id++;
                for (const std::size_t p : blob.pixels) labels[p] = id;
                stats.push_back(blob.stats);
                ++local.seeded_regions;
            } else {
                small.push_back(std::move(blob));
            }
        }

        // Small blobs never touch each other, so each borders a committed
        // region unless it covers the whole plane.
        for (Blob& blob : small) {
            const double blob_mean = blob.stats.mean();
            RegionId best = kUncommitted;
            double best_gap = std::numeric_limits<double>::infinity();
            for (const std::size_t p : blob.pixels) {
                for_each_neighbor(p, w, h, [&](std::size_t q) {
                    const RegionId r = labels[q];
                    if (r == kUncommitted) return;
                    const double gap = std::abs(blob_mean - stats[r].mean());
                    if (gap < best_gap || (gap == best_gap && r < best)) {
                        best_gap = gap;
                        best = r;
                    }
                });
            }
            if (best == kUncommitted) {
                best = state.next_id++;
                stats.emplace_back();
                ++local.seeded_regions;
            } else {
                local.absorbed += blob.pixels.size();
            }
            for (const std::size_t p : blob.pixels) labels[p] = best;
            stats[best].count += blob.stats.count;
            stats[best].sum += blob.stats.sum;
        }
    }

    local.split = split_disconnected(labels, w, h, px, stats, state.next_id, cfg.min_seed_size);

    // Regions that converged onto the same intensity (typically a region that
    // started from mixed border pixels and now holds a pure fragment of its
    // neighbour) are fused back together.
    local.fused = fuse_similar(labels, w, stats, cfg.deviation_delta);

    finalize(state, raw);
    if (report) *report = local;
    return state;
}

std::vector<SegmentationState> run_topdown(const Pyramid& pyr, const SegConfig& cfg,
                                           std::vector<RefineReport>* reports) {
    cfg.validate();
    if (pyr.levels.empty()) fail(ErrorKind::InvalidInput, "run_topdown: empty pyramid");

    const std::size_t top = pyr.top_index();
    std::vector<SegmentationState> states(pyr.level_count());
    std::vector<RefineReport> level_reports(pyr.level_count());
    states[top] = segment_top(pyr.top(), cfg, top);

    for (std::size_t k = top; k-- > 0;) {
        const ImagePlane& raw = pyr.levels[k];
        SegmentationState provisional = expand_maps(states[k + 1], raw);
        provisional.level = k;
        const auto deviant = mark_deviants(provisional, raw, cfg);
        uncommit(provisional, deviant, raw);
        states[k] = refine(std::move(provisional), raw, cfg, &level_reports[k]);
    }

    if (reports) *reports = std::move(level_reports);
    return states;
}

std::map<RegionId, RegionStats> recount_stats(const SegmentationState& state, const ImagePlane& raw) {
    return to_map(kernels::accumulate(state.labels, raw.pixels(), max_label(state.labels)));
}

}  // namespace physem
