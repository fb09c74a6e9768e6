#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "toolsup/config.hpp"
#include "toolsup/currsim.hpp"
#include "toolsup/error.hpp"
#include "toolsup/judge.hpp"
#include "toolsup/orientation.hpp"
#include "toolsup/png.hpp"
#include "toolsup/rng.hpp"
#include "toolsup/score.hpp"
#include "toolsup/server.hpp"
#include "toolsup/stats.hpp"
#include "toolsup/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace toolsup;

namespace {

struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;
};

// Every Config field becomes a --flag; values are JSON literals applied over
// the optional config file.
void add_config_flags(CLI::App* app, ConfigFlags& flags, bool rewards_only) {
  app->add_option("--config", flags.file, "Flat JSON config file");
  svc::Config probe;
  const auto defaults = svc::config_to_json(probe);
  for (const auto& [key, value] : defaults.items()) {
    if (rewards_only) {
      try {
        svc::apply_reward_overrides(probe.rewards, json{{key, value}});
      } catch (const Error&) {
        continue;
      }
    }
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    app->add_option(flag, flags.values[key], key)->default_str(value.dump());
  }
}

svc::Config resolve_config(const CLI::App* app, const ConfigFlags& flags) {
  svc::Config cfg = flags.file.empty() ? svc::Config{} : svc::load_config(flags.file);
  json overrides = json::object();
  for (const auto& [key, text] : flags.values) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (app->count(flag) == 0) continue;
    const json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) throw Error(ErrorCode::MalformedRequest, fmt::format("{} expects a JSON literal", flag));
    overrides[key] = v;
  }
  svc::apply_config(cfg, overrides);
  return cfg;
}

struct JudgeFlag {
  std::string spec;
  std::unique_ptr<rewards::Judge> judge;
};

// "exact" or host:port[/path]
rewards::Judge* make_judge(JudgeFlag& flag) {
  if (flag.spec.empty()) return nullptr;
  if (flag.spec == "exact") {
    flag.judge = std::make_unique<rewards::ExactMatchJudge>();
  } else {
    std::string rest = flag.spec;
    if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
    std::string path = "/judge";
    if (const auto slash = rest.find('/'); slash != std::string::npos) {
      path = rest.substr(slash);
      rest = rest.substr(0, slash);
    }
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::MalformedRequest, "--judge expects exact or host:port[/path]");
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedRequest, "--judge port must be an integer");
    }
    flag.judge = std::make_unique<rewards::HttpJudge>(rest.substr(0, colon), port, path);
  }
  return flag.judge.get();
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedRequest, fmt::format("{}:{}: invalid JSON", path.string(), n));
    out.push_back(std::move(j));
  }
  return out;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path));
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// -- gen-data ---------------------------------------------------------------

struct GenArgs {
  std::string task = "read-value";
  std::uint64_t seed = 0;
  std::size_t count = 10;
  std::string out = "data";
  std::string input;
  unsigned threads = 1;
  double p = synth::kAugmentProbability;
  int min_long_edge = 1024;
  int target_max = 512;
};

std::vector<fs::path> list_pngs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Source documents for augmentation: a directory of PNGs, or a JSONL manifest
// with "image" plus optional "question"/"answer".
struct SourceDoc {
  fs::path image;
  std::string question;
  std::string answer;
};

std::vector<SourceDoc> source_docs(const fs::path& input) {
  std::vector<SourceDoc> docs;
  if (fs::is_directory(input)) {
    for (auto& p : list_pngs(input)) docs.push_back({p, "", ""});
    return docs;
  }
  const fs::path base = input.parent_path();
  for (const auto& j : read_jsonl(input)) {
    if (!j.contains("image") || !j["image"].is_string()) {
      throw Error(ErrorCode::MalformedRequest, "manifest records need an \"image\" path");
    }
    fs::path img = j["image"].get<std::string>();
    if (img.is_relative()) img = base / img;
    docs.push_back({img, j.value("question", ""), j.contains("answer") && j["answer"].is_string()
                                                      ? j["answer"].get<std::string>()
                                                      : (j.contains("answer") ? j["answer"].dump() : "")});
  }
  return docs;
}

int run_gen(const GenArgs& a) {
  const fs::path out = a.out;
  if (a.task == "read-value" || a.task == "compare-count") {
    const auto samples = a.task == "read-value" ? synth::gen_read_value(a.seed, a.count, a.threads)
                                                : synth::gen_compare_count(a.seed, a.count, a.threads);
    synth::write_dataset(out, samples);
    std::cout << json{{"task", a.task}, {"samples", samples.size()}, {"manifest", (out / "manifest.jsonl").string()}}
              << '\n';
    return 0;
  }
  if (a.input.empty()) throw Error(ErrorCode::MalformedRequest, fmt::format("--task {} needs --input", a.task));
  auto docs = source_docs(a.input);
  if (a.count > 0 && docs.size() > a.count) docs.resize(a.count);
  fs::create_directories(out / "images");
  std::ofstream manifest(out / "manifest.jsonl");
  if (!manifest) throw Error(ErrorCode::Io, "cannot write manifest");
  std::size_t written = 0;
  if (a.task == "rotflip") {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const auto img = raster::read_png(docs[i].image);
      const auto doc = synth::augment_doc(img, docs[i].question, docs[i].answer, derive_seed(a.seed, 0xA06, i), a.p);
      const std::string id = fmt::format("rotflip-{}-{:05}", a.seed, i);
      const std::string rel = "images/" + id + ".png";
      raster::write_png(out / rel, doc.image);
      json rec = {{"id", id},
                  {"task", "rotflip"},
                  {"image", rel},
                  {"source", docs[i].image.string()},
                  {"question", doc.question},
                  {"augmentation", std::string(tools::orientation_name(doc.applied))},
                  {"ground_truth", {{"kind", "rotflip"}, {"o_star", std::string(tools::orientation_name(doc.inverse))}}}};
      if (!doc.answer.empty()) rec["answer"] = doc.answer;
      manifest << rec.dump() << '\n';
      ++written;
    }
  } else if (a.task == "highres") {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      std::vector<raster::Image> one;
      one.push_back(raster::read_png(docs[i].image));
      const auto picked = synth::select_highres_and_downscale(one, a.min_long_edge, a.target_max);
      if (picked.empty()) continue;
      const std::string id = fmt::format("highres-{:05}", i);
      const std::string rel = "images/" + id + ".png";
      raster::write_png(out / rel, picked[0].second);
      json rec = {{"id", id},
                  {"image", rel},
                  {"source", docs[i].image.string()},
                  {"source_size", {one[0].width(), one[0].height()}},
                  {"size", {picked[0].second.width(), picked[0].second.height()}}};
      if (!docs[i].question.empty()) rec["question"] = docs[i].question;
      if (!docs[i].answer.empty()) rec["answer"] = docs[i].answer;
      manifest << rec.dump() << '\n';
      ++written;
    }
  } else {
    throw Error(ErrorCode::MalformedRequest, fmt::format("unknown task '{}'", a.task));
  }
  std::cout << json{{"task", a.task}, {"samples", written}, {"manifest", (out / "manifest.jsonl").string()}} << '\n';
  return 0;
}

// -- score ------------------------------------------------------------------

struct ScoreArgs {
  int stage = 0;
  std::string requests;
  std::string manifest;
  std::string log;
  std::string image_root;
  std::string out;
  unsigned threads = 1;
  bool timing = false;
  JudgeFlag judge;
  ConfigFlags config;
};

// Joins trajectory log lines ({"id", "trace"|"trajectory", optional "sample"})
// with manifest records by sample id.
std::vector<json> manifest_requests(const ScoreArgs& a) {
  std::map<std::string, json> by_id;
  for (auto& rec : read_jsonl(a.manifest)) {
    if (!rec.contains("id") || !rec["id"].is_string()) throw Error(ErrorCode::MalformedRequest, "manifest record without id");
    auto key = rec["id"].get<std::string>();
    by_id[std::move(key)] = std::move(rec);
  }
  std::vector<json> out;
  for (const auto& entry : read_jsonl(a.log)) {
    if (!entry.is_object()) throw Error(ErrorCode::MalformedRequest, "log line is not an object");
    const auto text = [&](const char* key) -> std::string {
      const auto it = entry.find(key);
      return it != entry.end() && it->is_string() ? it->get<std::string>() : std::string();
    };
    const std::string id = text("id");
    const std::string sample = entry.contains("sample") ? text("sample") : id;
    const auto it = by_id.find(sample);
    if (it == by_id.end()) {
      out.push_back({{"id", id}, {"error", fmt::format("unknown sample '{}'", sample)}});
      continue;
    }
    json req = it->second;
    req["id"] = id;
    req["trajectory"] = entry.contains("trajectory") ? entry.at("trajectory") : json(text("trace"));
    req["stage"] = a.stage == 0 ? 1 : a.stage;
    out.push_back(std::move(req));
  }
  return out;
}

int severity(const json& resp) {
  if (resp.value("ok", false)) return 0;
  const std::string code = resp["error"].value("code", "internal");
  if (code == "judge_unavailable") return 3;
  if (code == "internal") return 4;
  return 2;
}

int run_score(CLI::App* app, ScoreArgs& a) {
  if (a.requests.empty() == a.manifest.empty()) {
    throw Error(ErrorCode::MalformedRequest, "give exactly one of --requests or --manifest");
  }
  if (!a.manifest.empty() && a.log.empty()) throw Error(ErrorCode::MalformedRequest, "--manifest needs --log");
  const auto cfg = resolve_config(app, a.config);
  svc::ScoreContext ctx;
  ctx.defaults = cfg.rewards;
  ctx.judge = make_judge(a.judge);
  ctx.timing = a.timing;
  const fs::path source = a.requests.empty() ? fs::path(a.manifest) : fs::path(a.requests);
  ctx.base_dir = a.image_root.empty() ? source.parent_path() : fs::path(a.image_root);
  if (ctx.base_dir.empty()) ctx.base_dir = ".";

  auto requests = a.requests.empty() ? manifest_requests(a) : read_jsonl(a.requests);
  if (!a.requests.empty() && a.stage != 0) {
    for (auto& r : requests) {
      if (r.is_object()) r["stage"] = a.stage;
    }
  }
  const auto responses = svc::score_batch(requests, ctx, a.threads);
  Output out(a.out);
  int worst = 0;
  std::size_t failed = 0;
  for (const auto& r : responses) {
    out.stream() << r.dump() << '\n';
    const int s = severity(r);
    worst = std::max(worst, s);
    failed += s != 0;
  }
  out.stream().flush();
  if (failed > 0) {
    std::cerr << json{{"error", {{"code", "request_failures"}, {"failed", failed}, {"total", responses.size()}}}}
              << '\n';
  }
  return worst;
}

// -- simulate ---------------------------------------------------------------

struct SimArgs {
  std::string modes = "toolsrl,accuracy_only";
  std::string seeds = "0";
  int steps = -1;
  std::string out;
  std::string log_out;
  int log_every = 0;
  ConfigFlags config;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "0,1,2" or "0..4"
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  try {
    for (const auto& part : split(s, ',')) {
      if (const auto dots = part.find(".."); dots != std::string::npos) {
        const auto lo = std::stoull(part.substr(0, dots));
        const auto hi = std::stoull(part.substr(dots + 2));
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        out.push_back(std::stoull(part));
      }
    }
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedRequest, fmt::format("bad --seeds '{}'", s));
  }
  if (out.empty()) throw Error(ErrorCode::MalformedRequest, "--seeds is empty");
  return out;
}

int run_simulate(CLI::App* app, SimArgs& a) {
  auto cfg = resolve_config(app, a.config);
  if (a.steps >= 0) {
    cfg.grpo.steps_per_stage = a.steps;
    cfg.grpo.validate();
  }
  std::vector<currsim::Mode> modes;
  for (const auto& name : split(a.modes, ',')) {
    const auto m = currsim::mode_from_string(name);
    if (!m) throw Error(ErrorCode::MalformedRequest, fmt::format("unknown mode '{}'", name));
    modes.push_back(*m);
  }
  const auto seeds = parse_seeds(a.seeds);

  Output out(a.out);
  std::unique_ptr<std::ofstream> log;
  if (!a.log_out.empty()) {
    log = std::make_unique<std::ofstream>(a.log_out);
    if (!*log) throw Error(ErrorCode::Io, fmt::format("cannot write {}", a.log_out));
  }
  bool header = true;
  json summary = json::array();
  for (const auto mode : modes) {
    double tools = 0, answer = 0;
    std::size_t evals = 0;
    for (const auto seed : seeds) {
      currsim::RunOptions opt{cfg.grpo, cfg.env, cfg.rewards, seed, a.log_every};
      currsim::Curriculum cur(opt);
      const auto result = cur.run(mode);
      if (!a.out.empty()) {
        currsim::write_metrics_csv(out.stream(), result.steps, header);
        header = false;
      }
      if (log) {
        for (const auto& r : result.logged) *log << r.dump() << '\n';
      }
      const auto s = currsim::summarize(result.steps, cfg.grpo.steps_per_stage);
      tools += s.stage2_tool_calls;
      answer += s.final_answer;
      evals += result.tool_reward_evaluations;
    }
    const double n = static_cast<double>(seeds.size());
    summary.push_back({{"mode", std::string(currsim::to_string(mode))},
                       {"seeds", seeds.size()},
                       {"stage2_tool_calls", tools / n},
                       {"final_answer", answer / n},
                       {"tool_reward_evaluations", evals}});
  }
  std::ostream& report = a.out.empty() ? std::cout : std::cerr;
  for (const auto& s : summary) report << s.dump() << '\n';
  return 0;
}

// -- stats ------------------------------------------------------------------

struct StatsArgs {
  std::string log;
  std::string csv;
  bool table = false;
  bool executed_only = false;
};

int run_stats(const StatsArgs& a) {
  std::ifstream in(a.log);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", a.log));
  const auto report = stats::usage_report(stats::read_log(in), a.executed_only);
  if (!a.csv.empty()) {
    Output out(a.csv);
    stats::write_report_csv(out.stream(), report);
  }
  if (a.table) {
    stats::write_report_table(std::cout, report);
  } else if (a.csv != "-") {
    std::cout << report.to_json().dump(2) << '\n';
  }
  return 0;
}

// -- serve ------------------------------------------------------------------

struct ServeArgs {
  bool stdio = false;
  std::string host = "127.0.0.1";
  int port = -1;
  std::size_t window = 64;
  unsigned workers = 4;
  std::string image_root = ".";
  bool timing = false;
  JudgeFlag judge;
  ConfigFlags config;
};

int run_serve(CLI::App* app, ServeArgs& a) {
  if (a.stdio == (a.port >= 0)) throw Error(ErrorCode::MalformedRequest, "give exactly one of --stdio or --port");
  if (a.window == 0) throw Error(ErrorCode::MalformedRequest, "--window must be >= 1");
  const auto cfg = resolve_config(app, a.config);
  svc::ServeOptions opts;
  opts.workers = a.workers;
  opts.window = a.window;
  opts.ctx.defaults = cfg.rewards;
  opts.ctx.judge = make_judge(a.judge);
  opts.ctx.base_dir = a.image_root;
  opts.ctx.timing = a.timing;
  if (a.stdio) {
    std::ios::sync_with_stdio(false);
    svc::serve_stream(std::cin, std::cout, opts);
    return 0;
  }
  svc::TcpServer server(opts, a.host, a.port);
  std::cerr << json{{"listening", {{"host", a.host}, {"port", server.port()}}}} << std::endl;
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toolsup: visual tool execution, reward scoring, synthetic data and curriculum simulation"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset with manifest.jsonl");
  gen_cmd->add_option("--task", gen.task, "read-value | compare-count | rotflip | highres")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "Samples to generate (rotflip/highres: max inputs, 0 = all)")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();
  gen_cmd->add_option("--input", gen.input, "Source PNG directory or JSONL manifest (rotflip, highres)");
  gen_cmd->add_option("--threads", gen.threads, "Worker threads")->capture_default_str();
  gen_cmd->add_option("--augment-prob", gen.p, "rotflip: probability of a non-identity augmentation")
      ->capture_default_str();
  gen_cmd->add_option("--min-long-edge", gen.min_long_edge, "highres: keep images whose long edge exceeds this")
      ->capture_default_str();
  gen_cmd->add_option("--target-max", gen.target_max, "highres: downscale to fit this square")->capture_default_str();

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score trajectories; one JSON response per line");
  score_cmd->add_option("--stage", score.stage, "1 or 2; overrides the request stage (manifest mode default 1)")
      ->check(CLI::Range(0, 2));
  score_cmd->add_option("--requests", score.requests, "JSONL of score requests");
  score_cmd->add_option("--manifest", score.manifest, "Dataset manifest.jsonl (use with --log)");
  score_cmd->add_option("--log", score.log, "JSONL trajectories: {id, trace, sample?}");
  score_cmd->add_option("--image-root", score.image_root, "Base directory for relative image paths");
  score_cmd->add_option("--out", score.out, "Output JSONL (default stdout)");
  score_cmd->add_option("--threads", score.threads, "Worker threads")->capture_default_str();
  score_cmd->add_flag("--timing", score.timing, "Add timing_ms to responses");
  score_cmd->add_option("--judge", score.judge.spec, "Stage-2 judge: exact | host:port[/path]");
  add_config_flags(score_cmd, score.config, true);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the toy GRPO curriculum");
  sim_cmd->add_option("--mode", sim.modes,
                      "Comma list of toolsrl, accuracy_only, tool_conditioned, global_only, answer_only, combined")
      ->capture_default_str();
  sim_cmd->add_option("--seeds", sim.seeds, "Seeds: 0,1,2 or 0..4")->capture_default_str();
  sim_cmd->add_option("--steps", sim.steps, "Steps per stage (overrides steps_per_stage)");
  sim_cmd->add_option("--out", sim.out, "Per-step metrics CSV");
  sim_cmd->add_option("--log-out", sim.log_out, "JSONL of logged episode score requests");
  sim_cmd->add_option("--log-every", sim.log_every, "Log the first group of every n-th step")->capture_default_str();
  add_config_flags(sim_cmd, sim.config, false);

  StatsArgs st;
  auto* stats_cmd = app.add_subcommand("stats", "Tool-usage report over a trajectory log");
  stats_cmd->add_option("--log", st.log, "JSONL log: {id, group, trace}")->required();
  stats_cmd->add_option("--csv", st.csv, "Write the CSV report here ('-' for stdout)");
  stats_cmd->add_flag("--table", st.table, "Print an aligned text table");
  stats_cmd->add_flag("--executed-only", st.executed_only, "Count only schema-valid calls");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Line-delimited JSON scoring service");
  serve_cmd->add_flag("--stdio", serve.stdio, "Serve stdin to stdout");
  serve_cmd->add_option("--host", serve.host, "TCP bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "TCP port (0 picks a free port)");
  serve_cmd->add_option("--window", serve.window, "Max requests in flight per stream")->capture_default_str();
  serve_cmd->add_option("--workers", serve.workers, "Scoring threads per stream")->capture_default_str();
  serve_cmd->add_option("--image-root", serve.image_root, "Base directory for relative image paths")
      ->capture_default_str();
  serve_cmd->add_flag("--timing", serve.timing, "Add timing_ms to responses");
  serve_cmd->add_option("--judge", serve.judge.spec, "Stage-2 judge: exact | host:port[/path]");
  add_config_flags(serve_cmd, serve.config, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*score_cmd) return run_score(score_cmd, score);
    if (*sim_cmd) return run_simulate(sim_cmd, sim);
    if (*stats_cmd) return run_stats(st);
    if (*serve_cmd) return run_serve(serve_cmd, serve);
  } catch (const Error& e) {
    std::cerr << json{{"error", {{"code", svc::error_code_name(e.code())}, {"message", e.what()}}}} << '\n';
    return svc::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}} << '\n';
    return 4;
  }
  return 0;
}
