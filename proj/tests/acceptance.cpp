// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "fixture.hpp"
#include "oracles.hpp"
#include "vidcurate/balance.hpp"
#include "vidcurate/captions.hpp"
#include "vidcurate/coverage.hpp"
#include "vidcurate/motion.hpp"
#include "vidcurate/packer.hpp"
#include "vidcurate/pipeline.hpp"
#include "vidcurate/sampler.hpp"

using namespace vidcurate;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

// 1. Sweep-line union area equals the raster count on random integer boxes.
Outcome union_area_oracle() {
    Outcome o;
    std::mt19937_64 eng(1);
    std::uniform_int_distribution<int> count(0, 10), coord(0, 1000);
    const auto t0 = Clock::now();
    int mismatches = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<oracle::IBox> boxes(count(eng));
        std::vector<Rect> rects;
        for (auto& b : boxes) {
            int x0 = coord(eng), x1 = coord(eng), y0 = coord(eng), y1 = coord(eng);
            if (x0 == x1) x1 = x0 == 1000 ? 999 : x0 + 1;
            if (y0 == y1) y1 = y0 == 1000 ? 999 : y0 + 1;
            b = {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
            rects.push_back(make_rect(b.x0, b.y0, b.x1, b.y1));
        }
        if (union_area(rects) != static_cast<double>(oracle::raster_union(boxes))) {
            ++mismatches;
        }
    }
    const double secs = since(t0);
    o.require(mismatches == 0, fmt::format("{} mismatches", mismatches));
    o.require(secs < 10.0, fmt::format("took {:.2f} s", secs));
    if (o.pass) o.detail = fmt::format("10000 sets exact, {:.2f} s", secs);
    return o;
}

// 2. Caption redundancy equals the brute-force pair maximum; refine keeps
// more as the threshold rises.
Outcome redundancy_oracle() {
    Outcome o;
    std::mt19937_64 eng(2);
    const std::vector<std::string> vocab{"dog", "cat", "runs", "sits", "red", "ball", "the", "a",
                                         "park", "sun", "water", "jumps", "over", "green", "slowly"};
    const std::vector<std::string> hanzi{"狗", "猫", "跑", "坐", "红", "球", "水", "跳"};
    std::vector<VideoRecord> recs;
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const bool zh = i % 4 == 0;
        const int n = 1 + static_cast<int>(eng() % 10);
        std::string text;
        std::vector<std::set<std::string>> sets;
        for (int s = 0; s < n; ++s) {
            const int len = 1 + static_cast<int>(eng() % 6);
            std::set<std::string> words;
            std::vector<std::string> chars;
            std::string sentence;
            for (int w = 0; w < len; ++w) {
                if (zh) {
                    chars.push_back(hanzi[eng() % hanzi.size()]);
                    sentence += chars.back();
                } else {
                    const auto& word = vocab[eng() % vocab.size()];
                    words.insert(word);
                    sentence += (w ? " " : "") + word;
                }
            }
            if (zh) {
                if (chars.size() == 1) words.insert(chars[0]);
                for (std::size_t k = 0; k + 1 < chars.size(); ++k) words.insert(chars[k] + chars[k + 1]);
            }
            text += sentence + (zh ? "。" : (eng() % 2 ? ". " : "! "));
            sets.push_back(std::move(words));
        }
        VideoRecord r;
        r.id = std::to_string(i);
        r.captions.push_back(Caption{zh ? Language::zh : Language::en, text, {}});
        if (record_redundancy(r) != oracle::max_pair_iou(sets)) {
            ++mismatches;
        }
        recs.push_back(std::move(r));
    }
    o.require(mismatches == 0, fmt::format("{} mismatches", mismatches));
    std::set<std::string> prev;
    bool monotone = true;
    for (int step = 0; step <= 100; ++step) {
        std::set<std::string> kept;
        for (const auto& r : refine_captions(recs, step / 100.0).kept) kept.insert(r.id);
        monotone = monotone && std::includes(kept.begin(), kept.end(), prev.begin(), prev.end());
        prev = std::move(kept);
    }
    o.require(monotone, "kept set shrank as the threshold rose");
    o.require(prev.size() == recs.size(), "threshold 1.0 dropped a record");
    if (o.pass) o.detail = "1000 captions exact, kept sets nested over 101 thresholds";
    return o;
}

GrayFrame sinusoid(double dx) {
    GrayFrame f(64, 64);
    const double k = 2 * std::numbers::pi / 8;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            f.at(x, y) = 0.5 + 0.25 * std::sin(k * (x - dx)) + 0.25 * std::sin(k * y);
    return f;
}

// 3. Horn-Schunck recovers a one-pixel shift; identical frames give no flow.
Outcome horn_schunck_recovery() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto a = sinusoid(0);
    const auto flow = horn_schunck(a, sinusoid(1), 1.0, 200);
    double u = 0, v = 0;
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        u += flow.u[i];
        v += flow.v[i];
    }
    u /= flow.u.size();
    v /= flow.v.size();
    const double still = mean_flow_magnitude(horn_schunck(a, a, 1.0, 200));
    const double secs = since(t0);
    o.require(u >= 0.7 && u <= 1.3, fmt::format("mean u {:.4f}", u));
    o.require(std::abs(v) < 0.15, fmt::format("mean v {:.4f}", v));
    o.require(still < 1e-9, fmt::format("identical frames magnitude {}", still));
    o.require(secs < 2.0, fmt::format("took {:.2f} s", secs));
    o.detail = fmt::format("mean u {:.4f}, mean v {:.2e}, still {:.1e}, {:.3f} s", u, v, still, secs);
    return o;
}

// 4. Balance fixpoint on A=500 plus 100 categories of 5.
Outcome category_balance() {
    Outcome o;
    std::vector<VideoRecord> recs;
    auto add = [&](const std::string& cat, int n) {
        for (int i = 0; i < n; ++i) {
            VideoRecord r;
            r.id = fmt::format("{}_{}", cat, i);
            r.category = cat;
            r.duration_s = 10;
            recs.push_back(r);
        }
    };
    add("A", 500);
    for (int c = 0; c < 100; ++c) add(fmt::format("c{:03d}", c), 5);
    const auto first = balance_categories(recs, 0.01, 123);
    const auto second = balance_categories(recs, 0.01, 123);
    const auto h = category_histogram(first.kept);
    const std::size_t a = h.counts.at("A");
    o.require(a == 5 && h.total == 505, fmt::format("A kept {} of {}", a, h.total));
    o.require(static_cast<double>(a) / h.total < 0.01, "share of A not below 1%");
    bool preserved = true;
    for (const auto& [cat, n] : h.counts) {
        if (cat != "A") preserved = preserved && n == 5;
    }
    o.require(preserved, "a small category changed");
    std::string s1, s2;
    for (const auto& r : first.kept) s1 += format_record_line(r) + "\n";
    for (const auto& r : second.kept) s2 += format_record_line(r) + "\n";
    o.require(s1 == s2, "rerun differs");
    if (o.pass) o.detail = fmt::format("A {}/{} = {:.5f}, small categories intact, rerun identical", a, h.total,
                                       static_cast<double>(a) / h.total);
    return o;
}

// 5. Built-in stages fit their budgets at the frame cap.
Outcome stage_budgets() {
    Outcome o;
    struct Row {
        StageName stage;
        int frames;
        std::int64_t visual, budget;
    };
    const Row rows[] = {{StageName::video_pt, 8, 2048, 2560},
                        {StageName::refine, 16, 2048, 2560},
                        {StageName::instruct, 64, 8192, 10000},
                        {StageName::long_video, 160, 20480, 22000}};
    for (const auto& r : rows) {
        const auto cfg = builtin_stage(r.stage);
        const auto d = token_budget(cfg, r.frames, 0);
        o.require(cfg.max_frames == r.frames, fmt::format("{} max frames {}", to_string(r.stage), cfg.max_frames));
        o.require(cfg.llm_budget_tokens == r.budget, fmt::format("{} budget {}", to_string(r.stage), cfg.llm_budget_tokens));
        o.require(d.account.visual_tokens == r.visual,
                  fmt::format("{} visual {}", to_string(r.stage), d.account.visual_tokens));
        o.require(d.admitted(), fmt::format("{} rejected", to_string(r.stage)));
    }
    if (o.pass) o.detail = "2048/2560, 2048/2560, 8192/10000, 20480/22000";
    return o;
}

// 6. Temporal position embedding values and range.
Outcome tpe_values() {
    Outcome o;
    for (int d : {2, 4, 16, 128}) {
        const auto z = tpe(0, {d});
        for (int k = 0; k < d; ++k) o.require(z[k] == (k % 2 ? 1.0 : 0.0), fmt::format("t=0 d={} entry {}", d, k));
    }
    const auto v = tpe(1, {4, 10000});
    double worst = 0;
    for (int k = 0; k < 4; ++k) {
        const double arg = 1.0 / std::pow(10000.0, k / 4.0);
        const double direct = k % 2 ? std::cos(arg) : std::sin(arg);
        worst = std::max(worst, std::abs(v[k] - direct));
    }
    o.require(worst <= 1e-9, fmt::format("t=1 deviation {}", worst));
    std::mt19937_64 eng(6);
    std::uniform_real_distribution<double> t(-1e4, 1e4);
    bool bounded = true;
    for (int i = 0; i < 10000; ++i) {
        for (double x : tpe(t(eng), {64})) bounded = bounded && x >= -1.0 && x <= 1.0;
    }
    o.require(bounded, "entry outside [-1, 1]");
    if (o.pass) o.detail = fmt::format("t=1 max deviation {:.1e}, 10000 random t bounded", worst);
    return o;
}

// 7. Patchify against the loop oracle.
Outcome patchify_oracle() {
    Outcome o;
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> val(-1, 1);
    double worst = 0;
    std::size_t cases = 0;
    auto check = [&](int n, int h, int w, int c, Stride s) {
        FeatureGrid g(n, h, w, c);
        for (auto& x : g.values) x = val(eng);
        PatchifyKernel k{s, c, std::vector<double>(static_cast<std::size_t>(c) * s.product())};
        for (auto& x : k.weights) x = val(eng);
        const auto out = patchify(g, k);
        const auto want = oracle::conv3d_depthwise(g.values, n, h, w, c, k.weights, s.t, s.h, s.w);
        if (out.values.size() != want.size()) {
            worst = INFINITY;
            return;
        }
        for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(out.values[i] - want[i]));
        ++cases;

        PatchifyKernel id{{1, 1, 1}, c, std::vector<double>(c, 1.0)};
        o.require(patchify(g, id) == g, "identity kernel changed the grid");
    };
    for (int n = 1; n <= 4; ++n)
        for (int h = 1; h <= 4; ++h)
            for (int w = 1; w <= 4; ++w)
                for (int c = 1; c <= 3; ++c)
                    for (int st = 1; st <= n; ++st)
                        for (int sh = 1; sh <= h; ++sh)
                            for (int sw = 1; sw <= w; ++sw)
                                if (n % st == 0 && h % sh == 0 && w % sw == 0) check(n, h, w, c, {st, sh, sw});
    const std::size_t exhaustive = cases;
    for (int i = 0; i < 1000; ++i) {
        const Stride s{1 + static_cast<int>(eng() % 3), 1 + static_cast<int>(eng() % 4), 1 + static_cast<int>(eng() % 4)};
        check(s.t * (1 + static_cast<int>(eng() % 4)), s.h * (1 + static_cast<int>(eng() % 4)),
              s.w * (1 + static_cast<int>(eng() % 4)), 1 + static_cast<int>(eng() % 5), s);
    }
    o.require(worst <= 1e-12, fmt::format("max deviation {}", worst));
    if (o.pass) o.detail = fmt::format("{} exhaustive + 1000 random, max deviation {:.1e}", exhaustive, worst);
    return o;
}

// 8. FFD against the exact optimum on every instance of <= 8 samples with
// budget <= 20, plus invariants on random instances and the mask predicate.
Outcome packing() {
    Outcome o;
    const auto t0 = Clock::now();
    const std::vector<std::string> ids{"0", "1", "2", "3", "4", "5", "6", "7"};
    std::size_t instances = 0, searched = 0;
    double worst_ratio = 0;
    std::vector<int> lens;
    std::vector<PackItem> items;
    std::function<void(int, int)> rec = [&](int budget, int min_len) {
        // evaluate current multiset
        if (!lens.empty()) {
            items.clear();
            int total = 0, big = 0;
            for (std::size_t i = 0; i < lens.size(); ++i) {
                items.push_back({ids[i], lens[i]});
                total += lens[i];
                big += 2 * lens[i] > budget;
            }
            const int ffd = static_cast<int>(pack_sequences(items, budget).composites.size());
            const int lower = std::max((total + budget - 1) / budget, big);
            int opt = lower;
            if (ffd != lower) {
                opt = oracle::optimal_bins(lens, budget);
                ++searched;
            }
            if (9 * ffd > 11 * opt + 9) {
                o.require(false, fmt::format("FFD {} vs OPT {} at budget {}", ffd, opt, budget));
            }
            worst_ratio = std::max(worst_ratio, static_cast<double>(ffd) / opt);
            ++instances;
        }
        if (lens.size() == 8) return;
        for (int l = min_len; l <= budget; ++l) {
            lens.push_back(l);
            rec(budget, l);
            lens.pop_back();
        }
    };
    for (int budget = 1; budget <= 20; ++budget) rec(budget, 1);

    std::mt19937_64 eng(8);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::int64_t budget = 1 + static_cast<std::int64_t>(eng() % 10000);
        std::vector<PackItem> in(1 + eng() % 64);
        std::int64_t total = 0;
        for (std::size_t i = 0; i < in.size(); ++i) {
            in[i] = {fmt::format("s{}", i), 1 + static_cast<std::int64_t>(eng() % budget)};
            total += in[i].length;
        }
        const auto plan = pack_sequences(in, budget);
        std::map<std::string, int> seen;
        std::int64_t packed = 0;
        for (const auto& c : plan.composites) {
            o.require(c.used() <= budget && !c.items.empty(), "composite over budget or empty");
            for (const auto& it : c.items) {
                ++seen[it.sample_id];
                packed += it.length;
            }
        }
        o.require(seen.size() == in.size() && packed == total, "samples not conserved");
        for (const auto& [_, n] : seen) o.require(n == 1, "sample placed twice");
    }

    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::int64_t> segs(1 + eng() % 6);
        Composite c;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            segs[i] = 1 + static_cast<std::int64_t>(eng() % 9);
            c.items.push_back({ids[i], segs[i]});
        }
        const auto mask = build_mask(c);
        std::int64_t count = 0;
        for (std::int64_t i = 0; i < mask.total_len; ++i) {
            for (std::int64_t j = 0; j < mask.total_len; ++j) {
                const bool want = oracle::block_causal(segs, i, j);
                count += want;
                if (attends(mask, i, j) != want) o.require(false, fmt::format("mask differs at ({}, {})", i, j));
            }
        }
        o.require(allowed_pairs(mask) == count, "allowed pair count differs");
    }
    const double secs = since(t0);
    o.require(secs < 30.0, fmt::format("took {:.2f} s", secs));
    if (o.pass)
        o.detail = fmt::format("{} instances ({} searched), worst FFD/OPT {:.3f}, {:.2f} s", instances, searched,
                               worst_ratio, secs);
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 9. Two full runs on the synthetic fixture: identical outputs, expected counts.
Outcome end_to_end() {
    Outcome o;
    const auto root = fs::temp_directory_path() / "vidcurate_acceptance";
    auto fx = fixture::write(root);
    auto t0 = Clock::now();
    const auto report = run_pipeline(fx.config);
    const double first = since(t0);
    auto again = fx.config;
    again.output = root / "out_again";
    t0 = Clock::now();
    run_pipeline(again);
    const double second = since(t0);

    for (std::size_t i = 0; i < fx.stages.size(); ++i) {
        const auto& want = fx.stages[i];
        if (i >= report.stages.size()) {
            o.require(false, "missing stage " + want.name);
            break;
        }
        const auto& got = report.stages[i];
        o.require(got.name == want.name && got.input == want.input && got.kept == want.kept &&
                      got.dropped == want.dropped,
                  fmt::format("{}: got {}/{}/{} want {}/{}/{}", want.name, got.input, got.kept, got.dropped,
                              want.input, want.kept, want.dropped));
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(fx.config.output)) {
        if (entry.path().extension() != ".jsonl") continue;
        ++compared;
        o.require(slurp(entry.path()) == slurp(again.output / entry.path().filename()),
                  entry.path().filename().string() + " differs between runs");
    }
    o.require(compared >= 10, fmt::format("only {} manifests written", compared));
    o.require(std::max(first, second) < 5.0, fmt::format("run took {:.2f} s", std::max(first, second)));
    if (o.pass)
        o.detail = fmt::format("{} manifests identical, counts match, runs {:.2f} s / {:.2f} s", compared, first,
                               second);
    fs::remove_all(root);
    return o;
}

} // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"union area vs raster oracle", union_area_oracle},
        {"caption redundancy vs pairwise oracle", redundancy_oracle},
        {"Horn-Schunck translation recovery", horn_schunck_recovery},
        {"category balance fixpoint", category_balance},
        {"stage token budgets", stage_budgets},
        {"temporal position embedding", tpe_values},
        {"patchify vs loop oracle", patchify_oracle},
        {"FFD packing vs optimum", packing},
        {"end-to-end determinism", end_to_end},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = Outcome{false, std::string("exception: ") + e.what()};
        }
        fmt::print("{} [{}] {}: {}\n", o.pass ? "PASS" : "FAIL", index, name, o.detail);
        failed += !o.pass;
    }
    fmt::print("{} of 9 criteria passed\n", 9 - failed);
    return failed == 0 ? 0 : 1;
}
