// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "cof/errors.hpp"
#include "cof/geometry.hpp"
#include "cof/grounding.hpp"
#include "cof/harness.hpp"
#include "cof/remote.hpp"
#include "cof/rng.hpp"
#include "cof/server.hpp"
#include "oracle.hpp"
#include "random_records.hpp"

using namespace cof;

namespace {

// Tolerances and limits.
constexpr double kOddsRelTol = 1e-9;
constexpr double kRowSumTol = 1e-12;
constexpr double kCenterTol = 1e-12;
constexpr double kAreaRelTol = 1e-9;
constexpr double kOracleTol = 1e-10;
constexpr double kBboxTol = 1e-12;
constexpr double kKernelSeconds = 5.0;
constexpr double kEndToEndSeconds = 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

ScoreMatrix random_scores(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  ScoreMatrix s;
  s.values = Matrix(rows, cols);
  for (double& v : s.values.data()) v = rng.normal() * scale;
  return s;
}

std::vector<bool> random_mask(Rng& rng, std::size_t n) {
  std::vector<bool> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = rng.below(2) == 1;
  return m;
}

NormBox random_unit_box(Rng& rng) {
  double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
  return {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
}

Outcome c1_identity() {
  const auto start = Clock::now();
  Rng rng(101);
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t rows = 1 + rng.below(16), cols = 1 + rng.below(64);
    const auto s = random_scores(rng, rows, cols, 1.0 + rng.uniform() * 20.0);
    const ReweightParams p{1.0, random_mask(rng, cols)};
    std::optional<VisibilityMask> vis;
    if (rng.below(2) == 1 && rows <= cols) vis = VisibilityMask::causal(rows, cols);
    const Matrix a = reweight_softmax(s, p, vis ? &*vis : nullptr);
    const Matrix b = softmax_rows(s, vis ? &*vis : nullptr);
    for (std::size_t i = 0; i < a.data().size(); ++i) mismatches += a.data()[i] != b.data()[i];
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < kKernelSeconds, fmt("%.0f mismatching entries, %.3f s", mismatches, secs)};
}

Outcome c2_odds_ratio() {
  const auto start = Clock::now();
  Rng rng(202);
  double worst = 0.0;
  for (double lambda : {2.0, 4.5, 22.0}) {
    for (int t = 0; t < 100; ++t) {
      const auto s = random_scores(rng, 1, 64, 3.0);
      auto mask = random_mask(rng, 64);
      mask[0] = true;
      mask[1] = false;
      const Matrix base = softmax_rows(s);
      const Matrix boosted = reweight_softmax(s, {lambda, mask});
      for (std::size_t i = 0; i < 64; ++i) {
        if (!mask[i]) continue;
        for (std::size_t j = 0; j < 64; ++j) {
          if (mask[j]) continue;
          const double r = (boosted(0, i) / boosted(0, j)) / (base(0, i) / base(0, j));
          worst = std::max(worst, std::abs(r / lambda - 1.0));
        }
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst <= kOddsRelTol && secs < kKernelSeconds, fmt("max relative error %.3g, %.3f s", worst, secs)};
}

Outcome c3_row_sums() {
  Rng rng(303);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t cols = 1 + rng.below(64);
    const std::size_t rows = 1 + rng.below(cols);
    const auto s = random_scores(rng, rows, cols, 1.0 + rng.uniform() * 30.0);
    const auto vis = VisibilityMask::causal(rows, cols);
    const double lambda = t % 2 == 0 ? 22.0 : rng.uniform(1.0, 50.0);
    const Matrix p = reweight_softmax(s, {lambda, random_mask(rng, cols)}, t % 3 == 0 ? nullptr : &vis);
    for (std::size_t i = 0; i < rows; ++i) {
      double sum = 0.0;
      for (double v : p.row(i)) sum += v;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return {worst <= kRowSumTol, fmt("max |row sum - 1| = %.3g", worst)};
}

Outcome c4_geometry() {
  Rng rng(404);
  std::size_t outside = 0, center_bad = 0, area_bad = 0, unclamped = 0;
  for (int t = 0; t < 10000; ++t) {
    const NormBox b = random_unit_box(rng);
    const double alpha = rng.uniform(0.5, 3.0);
    const NormBox e = expand_box(b, alpha);
    const NormBox c = clamp_box(e);
    if (!c.is_well_formed()) ++outside;
    if (c == e) {
      ++unclamped;
      if (std::abs(c.center_x() - b.center_x()) > kCenterTol || std::abs(c.center_y() - b.center_y()) > kCenterTol) {
        ++center_bad;
      }
      if (b.area() > 0.0 && std::abs(c.area() / b.area() / (alpha * alpha) - 1.0) > kAreaRelTol) ++area_bad;
    }
  }
  std::ostringstream d;
  d << outside << " outside the unit square, " << center_bad << " center and " << area_bad << " area violations ("
    << unclamped << " unclamped cases)";
  return {outside == 0 && center_bad == 0 && area_bad == 0 && unclamped > 0, d.str()};
}

Outcome c5_mask_oracle() {
  Rng rng(505);
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const PatchGrid g{1 + static_cast<int>(rng.below(32)), 1 + static_cast<int>(rng.below(32))};
    NormBox b = random_unit_box(rng);
    if (t % 10 == 0) {
      // Snap to patch edges to exercise the boundary rule.
      b = {std::floor(b.x1 * g.cols) / g.cols, std::floor(b.y1 * g.rows) / g.rows, std::ceil(b.x2 * g.cols) / g.cols,
           std::ceil(b.y2 * g.rows) / g.rows};
    }
    if (t % 50 == 0) b.x2 = b.x1;  // zero area
    mismatches += box_to_mask(b, g) != oracle::brute_force_mask(b, g);
  }
  return {mismatches == 0, fmt("%.0f mismatches in 1000 boxes", mismatches)};
}

Outcome c6_model_oracle() {
  Rng rng(606);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    ModelDims dims;
    dims.n_layers = 1 + static_cast<int>(rng.below(2));
    dims.n_heads = 1 << rng.below(3);
    dims.model_dim = dims.n_heads * (2 + 2 * static_cast<int>(rng.below(64 / (2 * dims.n_heads))));
    dims.ffn_dim = 4 + static_cast<int>(rng.below(61));
    dims.encoder_dim = 2 + static_cast<int>(rng.below(15));
    dims.n_answers = 3 + static_cast<int>(rng.below(6));
    const auto w = ModelWeights::random(dims, rng.next_u64());

    SyntheticImage img;
    img.grid = {1 + static_cast<int>(rng.below(4)), 1 + static_cast<int>(rng.below(4))};
    img.patch_features = Matrix(img.grid.size(), static_cast<std::size_t>(dims.feature_dim));
    for (double& v : img.patch_features.data()) v = rng.normal();
    const auto seq = build_sequence(img, "w1 w4 w2 w9", w);
    oracle::Mat rows;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto tok = seq.token(i);
      rows.emplace_back(tok.begin(), tok.end());
    }

    const auto cols = random_mask(rng, seq.n_visual());
    const double lambda = t % 5 == 0 ? 1.0 : rng.uniform(1.0, 30.0);
    const auto layers = rng.below(3) == 0 ? LayerScope::layers(0, 1) : LayerScope::all();
    const AttentionReweight rw{{lambda, cols}, layers};
    const oracle::Reweight orw{cols, lambda, layers};

    AttentionTrace trace;
    const auto logits = decode_step(seq, w, rw, &trace);
    const auto want = oracle::forward(w, rows, &orw);
    for (std::size_t k = 0; k < logits.size(); ++k) worst = std::max(worst, std::abs(logits[k] - want.logits[k]));
    for (std::size_t l = 0; l < trace.probs.size(); ++l) {
      for (std::size_t h = 0; h < trace.probs[l].size(); ++h) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
          for (std::size_t j = 0; j < seq.size(); ++j) {
            worst = std::max(worst, std::abs(trace.probs[l][h](i, j) - want.probs[l][h][i][j]));
          }
        }
      }
    }
  }
  return {worst <= kOracleTol, fmt("max abs difference %.3g over 50 configurations", worst)};
}

std::shared_ptr<const ModelWeights> task_model() {
  static const auto w = std::make_shared<const ModelWeights>(ModelWeights::task_model(42));
  return w;
}

Outcome c7_end_to_end() {
  const auto start = Clock::now();
  SuiteOptions so;
  so.seed = 7;
  so.n_tasks = 200;
  so.distractor_count = 3;
  ToyBackend backend(task_model());
  CoFConfig c;
  c.alpha = 1.0;
  c.lambda = 4.5;
  const auto res = evaluate(generate_suite(so), backend,
                            {RunVariant::baseline, RunVariant::reweight_global, RunVariant::cof}, c);
  const auto* base = res.summary.find(RunVariant::baseline);
  const auto* global = res.summary.find(RunVariant::reweight_global);
  const auto* cof = res.summary.find(RunVariant::cof);
  const double secs = seconds_since(start);
  const bool ok = res.summary.failures == 0 && cof->accuracy >= base->accuracy &&
                  base->mean_mass < global->mean_mass && global->mean_mass < cof->mean_mass &&
                  secs < kEndToEndSeconds;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "accuracy %.3f / %.3f / %.3f, mass %.4f < %.4f < %.4f, %.2f s", base->accuracy,
                global->accuracy, cof->accuracy, base->mean_mass, global->mean_mass, cof->mean_mass, secs);
  return {ok, buf};
}

Outcome c8_fallback() {
  SuiteOptions so;
  so.n_tasks = 50;
  so.probe_fraction = 0.3;
  GroundingNoise refusal;
  refusal.mode = GroundingNoiseMode::refusal;
  ToyBackend backend(task_model(), refusal);
  const auto res = evaluate(generate_suite(so), backend, {RunVariant::reweight_global, RunVariant::cof},
                            CoFConfig::preset(Preset::llava_v15_13b));
  std::size_t bad = 0;
  for (std::size_t i = 0; i < res.records.size(); i += 2) {
    const auto& g = res.records[i];
    const auto& c = res.records[i + 1];
    const bool full = c.fallback && c.mask_cardinality == 16 && c.clamped_box == NormBox::full_image();
    if (!full || g.failed || c.failed || !same_outcome(g, c)) ++bad;
  }
  return {bad == 0 && res.records.size() == 100, fmt("%.0f of %.0f tasks differ", bad, res.records.size() / 2)};
}

Outcome c9_parser_fuzz() {
  Rng rng(909);
  std::size_t parsed = 0;
  const std::string alphabet = "{}[]\":,.-+eE0123456789 bboxnulltrue\n\t";
  for (int t = 0; t < 100000; ++t) {
    std::string s;
    if (t % 3 == 2) {
      // Mutated valid answer.
      s = format_bbox_json(random_unit_box(rng));
      for (std::uint64_t k = rng.below(4); k > 0; --k) s[rng.below(s.size())] = alphabet[rng.below(alphabet.size())];
    } else {
      s.assign(rng.below(80), '\0');
      for (char& ch : s) ch = t % 3 == 0 ? static_cast<char>(rng.below(256)) : alphabet[rng.below(alphabet.size())];
    }
    try {
      parsed += parse_bbox_response(s, 1 + static_cast<int>(rng.below(2000)), 1 + static_cast<int>(rng.below(2000)))
                    .ok();
    } catch (...) {
      return {false, "parser threw on fuzz input " + std::to_string(t)};
    }
  }
  double worst = 0.0;
  std::size_t failed = 0;
  for (int t = 0; t < 10000; ++t) {
    const NormBox b = random_unit_box(rng);
    const auto r = parse_bbox_response(format_bbox_json(b), 336, 336);
    if (!r.ok()) {
      ++failed;
      continue;
    }
    const NormBox& p = *r.parsed_box;
    worst = std::max({worst, std::abs(p.x1 - b.x1), std::abs(p.y1 - b.y1), std::abs(p.x2 - b.x2),
                      std::abs(p.y2 - b.y2)});
  }
  std::ostringstream d;
  d << "100000 fuzz inputs without a crash (" << parsed << " parsed), " << failed
    << " round-trip failures, max error " << worst;
  return {failed == 0 && worst <= kBboxTol, d.str()};
}

Outcome c10_persistence() {
  Rng rng(1010);
  std::stringstream ss;
  JsonlWriter writer(ss);
  std::vector<EvalRecord> recs;
  for (int i = 0; i < 1000; ++i) {
    recs.push_back(testing_util::random_record(rng));
    writer.write(recs.back());
  }
  const auto back = read_jsonl(ss);
  std::size_t diff = back.size() == recs.size() ? 0 : 1000;
  for (std::size_t i = 0; diff == 0 && i < back.size(); ++i) diff += !(back[i] == recs[i]);

  SuiteOptions so;
  so.n_tasks = 100;
  ToyBackend backend(task_model());
  const std::vector<double> alphas{1.0, 1.3, 2.0};
  const std::vector<double> lambdas{1.0, 2.0, 4.5, 22.0};
  std::stringstream csv;
  write_sweep_csv(csv, sweep(generate_suite(so), backend, alphas, lambdas, {RunVariant::cof}, CoFConfig{}));
  const auto rows = read_sweep_csv(csv);
  std::size_t decreases = 0;
  std::map<double, double> last;
  for (const auto& r : rows) {
    const auto it = last.find(r.alpha);
    if (it != last.end() && r.mean_mass < it->second) ++decreases;
    last[r.alpha] = r.mean_mass;
  }
  std::ostringstream d;
  d << diff << " JSONL mismatches in 1000 records; " << rows.size() << " sweep rows, " << decreases
    << " mass decreases along lambda";
  return {diff == 0 && decreases == 0 && rows.size() == 12, d.str()};
}

Outcome c11_remote() {
  SuiteOptions so;
  so.n_tasks = 1;
  const auto task = generate_suite(so).front();
  std::map<std::string, SyntheticImage> images{{task.task_id, task.image}};

  std::vector<std::string> log;
  RemoteOptions opts;
  opts.sleep = [](std::chrono::milliseconds) {};
  opts.log = [&log](const std::string& l) { log.push_back(l); };

  ServerOptions flaky;
  flaky.fail_first = 2;
  ToyServer s1(task_model(), images, flaky);
  s1.start();
  RemoteBackend b1(s1.endpoint(), opts);
  const auto res = evaluate({task}, b1, {RunVariant::cof}, CoFConfig{});
  s1.stop();
  const bool retried = res.records.size() == 1 && !res.records[0].failed && log.size() == 2 && b1.retries() == 2;

  ServerOptions strict;
  strict.reject_mask = true;
  ToyServer s2(task_model(), images, strict);
  s2.start();
  RemoteBackend b2(s2.endpoint(), opts);
  bool capability = false;
  std::string what;
  try {
    run_variant(b2, task.image_ref(), task.question, RunVariant::cof, CoFConfig{});
  } catch (const CapabilityMissing& e) {
    capability = true;
    what = e.what();
  } catch (const std::exception& e) {
    what = e.what();
  }
  s2.stop();
  std::ostringstream d;
  d << res.records.size() << " result, " << log.size() << " logged retries; masked request rejected with "
    << (capability ? "CapabilityMissing" : "wrong error") << " (" << what << ")";
  return {retried && capability && b2.retries() == 0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"lambda=1 reweighting equals softmax bit for bit (1000 matrices)", c1_identity},
      {"odds ratio scales by lambda for lambda in {2, 4.5, 22}", c2_odds_ratio},
      {"reweighted rows sum to 1 with causal masks", c3_row_sums},
      {"expand + clamp geometry (10000 cases)", c4_geometry},
      {"box_to_mask equals the brute-force overlap oracle", c5_mask_oracle},
      {"toy decoder matches the triple-loop oracle (50 configurations)", c6_model_oracle},
      {"end to end: cof >= baseline accuracy, mass baseline < global < cof", c7_end_to_end},
      {"refusal fallback: full-image mask, identical to reweight_global", c8_fallback},
      {"bbox parser fuzz and round trip", c9_parser_fuzz},
      {"JSONL round trip and sweep mass monotone in lambda", c10_persistence},
      {"remote protocol: retries and capability_missing", c11_remote},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
