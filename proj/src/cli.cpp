/*
 * Copyright 2026 The pruning-mbr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pmbr/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmbr/chart.hpp"
#include "pmbr/core.hpp"
#include "pmbr/error.hpp"
#include "pmbr/eval.hpp"
#include "pmbr/mbr.hpp"
#include "pmbr/parallel.hpp"
#include "pmbr/report.hpp"
#include "pmbr/utility.hpp"

namespace pmbr {

namespace {

// JSON object of flag name -> value. Top-level scalars belong to the
// subcommand being run; nested objects address a subcommand explicitly
// ({"decode": {"seed": 3}}).
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string section = {}) : section_(std::move(section)) {}

  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    nlohmann::ordered_json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      if (opt->count() > 0) {
        const auto res = opt->results();
        j[opt->get_lnames()[0]] = res.size() == 1 ? nlohmann::ordered_json(res[0])
                                                  : nlohmann::ordered_json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[opt->get_lnames()[0]] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("invalid JSON config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, "", {}, items);
    if (!section_.empty()) {
      for (auto& item : items)
        if (item.parents.empty()) item.parents.push_back(section_);
    }
    return items;
  }

 private:
  std::string section_;

  static void flatten(const nlohmann::json& j, const std::string& name,
                      std::vector<std::string> prefix,
                      std::vector<CLI::ConfigItem>& out) {
    if (j.is_object()) {
      if (!name.empty()) prefix.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it)
        flatten(*it, it.key(), prefix, out);
      return;
    }
    if (name.empty())
      throw CLI::ConversionError("JSON config must be an object");
    CLI::ConfigItem item;
    item.name = name;
    item.parents = std::move(prefix);
    const auto scalar = [](const nlohmann::json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      return v.dump();
    };
    if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(j));
    }
    out.push_back(std::move(item));
  }
};

std::string env_name(const std::string& flag) {
  std::string out = "PMBR_";
  for (char c : flag)
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Every long flag can be overridden as PMBR_<FLAG> (dashes -> underscores).
void add_env_overrides(CLI::App* app) {
  for (CLI::Option* opt : app->get_options({})) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names[0] == "help" || names[0] == "config") continue;
    opt->envname(env_name(names[0]));
  }
}

struct CommonOptions {
  std::string utility = "chrf";
  int chrf_char_order = 6;
  int chrf_word_order = 2;
  double chrf_beta = 2.0;
  double remote_timeout = 60.0;
  std::size_t remote_batch_size = 256;
  int remote_retries = 3;
  std::uint64_t seed = 1;
  std::size_t trials = 1;
  std::size_t n_boot = 500;
  std::size_t jobs = 1;
  std::string input;
};

void add_common(CLI::App* sub, CommonOptions& o, bool needs_input = true) {
  if (needs_input)
    sub->add_option("-i,--input", o.input, "Corpus (JSON lines)")->required();
  sub->add_option("--utility", o.utility,
                  "chrf | matrix:PATH | remote:URL")->capture_default_str();
  sub->add_option("--chrf-char-order", o.chrf_char_order)->capture_default_str();
  sub->add_option("--chrf-word-order", o.chrf_word_order)->capture_default_str();
  sub->add_option("--chrf-beta", o.chrf_beta)->capture_default_str();
  sub->add_option("--remote-timeout", o.remote_timeout,
                  "Seconds per request")->capture_default_str();
  sub->add_option("--remote-batch-size", o.remote_batch_size)->capture_default_str();
  sub->add_option("--remote-retries", o.remote_retries)->capture_default_str();
  sub->add_option("--seed", o.seed)->capture_default_str();
  sub->add_option("--trials", o.trials)->capture_default_str();
  sub->add_option("--n-boot", o.n_boot, "Bootstrap resamples per step")
      ->capture_default_str();
  sub->add_option("--jobs", o.jobs, "Instance-level worker threads")
      ->capture_default_str();
}

// Owns the backends a run uses and hands them out per instance.
class Backends {
 public:
  Backends(const CommonOptions& o, std::span<const PreparedInstance> corpus) {
    const std::string& spec = o.utility;
    if (spec == "chrf") {
      ChrfParams p{o.chrf_char_order, o.chrf_word_order, o.chrf_beta};
      shared_ = std::make_unique<ChrfBackend>(p);
    } else if (spec.rfind("matrix:", 0) == 0) {
      auto matrices = load_utility_matrices(spec.substr(7));
      for (const auto& inst : corpus) {
        const auto it = matrices.find(inst.id());
        if (it == matrices.end())
          throw ValidationError("instance " + inst.id() +
                                ": no utility matrix in " + spec.substr(7));
        per_instance_.emplace(inst.id(), matrix_backend(it->second, inst));
      }
    } else if (spec.rfind("remote:", 0) == 0) {
      RemoteOptions r;
      r.endpoint = spec.substr(7);
      r.timeout_seconds = o.remote_timeout;
      r.batch_size = o.remote_batch_size;
      r.max_retries = o.remote_retries;
      auto remote = remote_backend(r);
      remote->health();
      shared_ = std::move(remote);
    } else {
      throw ValidationError("unknown --utility \"" + spec +
                            "\" (expected chrf, matrix:PATH or remote:URL)");
    }
  }

  const UtilityBackend& operator()(const PreparedInstance& inst) const {
    if (shared_) return *shared_;
    return *per_instance_.at(inst.id());
  }

  BackendFactory factory() const {
    return [this](const PreparedInstance& inst) -> const UtilityBackend& {
      return (*this)(inst);
    };
  }

 private:
  std::unique_ptr<UtilityBackend> shared_;
  std::map<std::string, std::unique_ptr<UtilityBackend>> per_instance_;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  return Schedule::parse(text).sizes();
}

EvalOptions eval_options(const CommonOptions& o, const Schedule& schedule) {
  EvalOptions e;
  e.schedule = schedule;
  e.n_boot = o.n_boot;
  e.trials = o.trials;
  e.seed = o.seed;
  e.jobs = o.jobs;
  if (e.n_boot < 1) throw ValidationError("--n-boot must be at least 1");
  if (e.trials < 1) throw ValidationError("--trials must be at least 1");
  return e;
}

std::vector<double> checked_grid(const std::string& text, const char* flag) {
  auto grid = parse_grid(text);
  if (grid.empty())
    throw ValidationError(std::string(flag) + " grid must be non-empty");
  return grid;
}

}  // namespace

std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> out;
  const auto number = [&](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw ValidationError("invalid grid value \"" + std::string(s) + "\"");
    return v;
  };
  // Range arithmetic drifts (0.05 + 5 * 0.05 = 0.30000000000000004);
  // snapping to 12 decimals recovers the intended values.
  const auto snap = [](double v) { return std::round(v * 1e12) / 1e12; };
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = text.substr(start, end - start);
    start = end + 1;
    if (item.find(':') == std::string_view::npos) {
      out.push_back(number(item));
      continue;
    }
    const auto c1 = item.find(':');
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string_view::npos)
      throw ValidationError("range must be start:stop:step, got \"" +
                            std::string(item) + "\"");
    const double lo = number(item.substr(0, c1));
    const double hi = number(item.substr(c1 + 1, c2 - c1 - 1));
    const double step = number(item.substr(c2 + 1));
    if (!(step > 0) || hi < lo)
      throw ValidationError("invalid range \"" + std::string(item) + "\"");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k)
      out.push_back(snap(lo + static_cast<double>(k) * step));
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Pruning minimum Bayes risk decoding toolkit"};
  app.require_subcommand(1);

  // decode
  CommonOptions decode_opt;
  std::string decode_method = "standard";
  std::string decode_schedule = "16,32,64,128,256";
  std::size_t decode_refs = 0;
  std::string decode_output;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a corpus");
  add_common(decode_cmd, decode_opt);
  decode_cmd->add_option("--method", decode_method,
                         "standard | confidence:<alpha> | rank:<beta>")
      ->capture_default_str();
  decode_cmd->add_option("--schedule", decode_schedule)->capture_default_str();
  decode_cmd->add_option("--refs", decode_refs,
                         "Reference count for --method standard");
  decode_cmd->add_option("-o,--output", decode_output,
                         "Output JSON lines (default stdout)");

  // sweep
  CommonOptions sweep_opt;
  std::string sweep_alphas = "0.8,0.9,0.95,0.98,0.99";
  std::string sweep_betas = "0.05:0.95:0.05";
  std::string sweep_schedule = "16,32,64,128,256";
  std::string sweep_out = "sweep";
  auto* sweep_cmd = app.add_subcommand("sweep", "Speed-accuracy trade-off sweep");
  add_common(sweep_cmd, sweep_opt);
  sweep_cmd->add_option("--alphas", sweep_alphas)->capture_default_str();
  sweep_cmd->add_option("--betas", sweep_betas)->capture_default_str();
  sweep_cmd->add_option("--schedule", sweep_schedule)->capture_default_str();
  sweep_cmd->add_option("-o,--out", sweep_out, "Output prefix")->capture_default_str();

  // false-prune
  CommonOptions fp_opt;
  std::string fp_alphas = "0.8,0.9,0.99";
  std::string fp_sizes = "8,16,32,64,128,256";
  std::string fp_out = "false_prune";
  auto* fp_cmd = app.add_subcommand("false-prune", "False pruning rates");
  add_common(fp_cmd, fp_opt);
  fp_cmd->add_option("--alphas", fp_alphas)->capture_default_str();
  fp_cmd->add_option("--sizes", fp_sizes)->capture_default_str();
  fp_cmd->add_option("-o,--out", fp_out, "Output prefix")->capture_default_str();

  // report
  CommonOptions report_opt;
  std::string report_configs = "standard,confidence:0.99,confidence:0.9";
  std::string report_schedule = "16,32,64,128,256";
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Summary table per method");
  add_common(report_cmd, report_opt);
  report_cmd->add_option("--configs", report_configs)->capture_default_str();
  report_cmd->add_option("--schedule", report_schedule)->capture_default_str();
  report_cmd->add_option("-o,--out", report_out, "Output prefix for CSV/JSON");

  // trace
  CommonOptions trace_opt;
  std::string trace_method = "confidence:0.99";
  std::string trace_schedule = "16,32,64,128,256";
  std::string trace_out = "survival";
  auto* trace_cmd =
      app.add_subcommand("trace", "Surviving hypotheses per schedule step");
  add_common(trace_cmd, trace_opt);
  trace_cmd->add_option("--method", trace_method)->capture_default_str();
  trace_cmd->add_option("--schedule", trace_schedule)->capture_default_str();
  trace_cmd->add_option("-o,--out", trace_out, "Output prefix")->capture_default_str();

  // chart
  std::string chart_in;
  std::string chart_out;
  ChartSpec chart_spec;
  auto* chart_cmd = app.add_subcommand("chart", "SVG line chart from a CSV report");
  chart_cmd->add_option("-i,--input", chart_in, "CSV produced by this tool")->required();
  chart_cmd->add_option("-o,--output", chart_out, "SVG path")->required();
  chart_cmd->add_option("--x", chart_spec.x)->capture_default_str();
  chart_cmd->add_option("--y", chart_spec.y)->capture_default_str();
  chart_cmd->add_option("--series", chart_spec.series)->capture_default_str();
  chart_cmd->add_option("--title", chart_spec.title);

  // synth
  SynthOptions synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
  synth_cmd->add_option("-o,--output", synth_out)->required();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--instances", synth.n_instances)->capture_default_str();
  synth_cmd->add_option("--hypotheses", synth.n_hypotheses)->capture_default_str();
  synth_cmd->add_option("--pool-size", synth.pool_size)->capture_default_str();
  synth_cmd->add_option("--vocab-size", synth.vocab_size)->capture_default_str();
  synth_cmd->add_option("--edit-rate", synth.edit_rate)->capture_default_str();
  synth_cmd->add_option("--min-length", synth.min_length)->capture_default_str();
  synth_cmd->add_option("--max-length", synth.max_length)->capture_default_str();

  // matrix
  CommonOptions matrix_opt;
  std::string matrix_out;
  auto* matrix_cmd = app.add_subcommand(
      "matrix", "Score every hypothesis/pool pair into utility matrices");
  add_common(matrix_cmd, matrix_opt);
  matrix_cmd->add_option("-o,--output", matrix_out)->required();

  std::string config_path;
  for (CLI::App* sub : app.get_subcommands({})) {
    // Only listed for --help; the value is pulled out of argv below.
    sub->add_option("--config", config_path,
                    "JSON file with flag values (also PMBR_CONFIG)");
    sub->allow_config_extras(CLI::config_extras_mode::error);
    add_env_overrides(sub);
  }

  // CLI11 only reads config files on the top-level app, so --config is
  // lifted out of the subcommand's arguments and attached there, with
  // bare keys routed to the chosen subcommand.
  std::vector<std::string> argl(args.begin(), args.end());
  std::string section;
  for (std::size_t k = 1; k < argl.size(); ++k) {
    if (section.empty() && app.get_subcommand_no_throw(argl[k]) != nullptr)
      section = argl[k];
    if (argl[k] == "--config" && k + 1 < argl.size()) {
      config_path = argl[k + 1];
      argl.erase(argl.begin() + k, argl.begin() + k + 2);
      --k;
    } else if (argl[k].rfind("--config=", 0) == 0) {
      config_path = argl[k].substr(9);
      argl.erase(argl.begin() + k);
      --k;
    }
  }
  if (config_path.empty()) {
    if (const char* env = std::getenv("PMBR_CONFIG")) config_path = env;
  }
  if (!config_path.empty() && !section.empty()) {
    app.set_config("--pmbr-config-file", config_path, "", true)
        ->group("");
    app.config_formatter(std::make_shared<JsonConfig>(section));
    app.allow_config_extras(CLI::config_extras_mode::error);
  }

  std::vector<const char*> argv;
  for (const auto& a : argl) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::FileError& e) {
    app.exit(e, out, err);
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (*decode_cmd) {
      const auto corpus = prepare(load_corpus(decode_opt.input));
      DecodeConfig config;
      config.method = Method::parse(decode_method);
      if (decode_refs > 0) {
        if (config.method.kind != MethodKind::standard)
          throw ValidationError("--refs only applies to --method standard");
        config.schedule = Schedule({decode_refs});
      } else {
        config.schedule = Schedule::parse(decode_schedule);
      }
      config.n_boot = decode_opt.n_boot;
      config.seed = decode_opt.seed;
      config.trials = decode_opt.trials;
      config.validate();
      for (const auto& inst : corpus) config.schedule.validate_for(inst.instance());
      const Backends backends(decode_opt, corpus);

      std::vector<std::string> lines(corpus.size());
      parallel_for(corpus.size(), decode_opt.jobs, [&](std::size_t i) {
        std::string block;
        for (std::size_t t = 0; t < config.trials; ++t) {
          const auto r = decode(corpus[i], config, backends(corpus[i]), t);
          block += decode_result_json(corpus[i].instance(), t, r) + "\n";
        }
        lines[i] = std::move(block);
      });
      std::string all;
      for (const auto& l : lines) all += l;
      if (decode_output.empty()) {
        out << all;
      } else {
        write_file(decode_output, all);
      }
    } else if (*sweep_cmd) {
      const auto corpus = prepare(load_corpus(sweep_opt.input));
      const auto alphas = checked_grid(sweep_alphas, "--alphas");
      const auto betas = checked_grid(sweep_betas, "--betas");
      const auto opts = eval_options(sweep_opt, Schedule::parse(sweep_schedule));
      const Backends backends(sweep_opt, corpus);
      const auto report =
          tradeoff_sweep(corpus, alphas, betas, opts, backends.factory());
      write_file(sweep_out + ".csv",
                 render([&](std::ostream& s) { write_sweep_csv(s, report); }));
      write_file(sweep_out + "_summary.csv", render([&](std::ostream& s) {
                   write_sweep_summary_csv(s, report);
                 }));
      write_file(sweep_out + ".json", sweep_json(report));
    } else if (*fp_cmd) {
      const auto corpus = prepare(load_corpus(fp_opt.input));
      const auto alphas = checked_grid(fp_alphas, "--alphas");
      const auto sizes = parse_sizes(fp_sizes);
      auto opts = eval_options(fp_opt, Schedule(sizes));
      const Backends backends(fp_opt, corpus);
      const auto table =
          false_pruning_rate(corpus, alphas, sizes, opts, backends.factory());
      write_file(fp_out + ".csv", render([&](std::ostream& s) {
                   write_false_prune_csv(s, table);
                 }));
      write_file(fp_out + ".json", false_prune_json(table));
    } else if (*report_cmd) {
      const auto corpus = prepare(load_corpus(report_opt.input));
      std::vector<Method> methods;
      std::string_view rest = report_configs;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        methods.push_back(Method::parse(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (methods.empty()) throw ValidationError("--configs must be non-empty");
      const auto opts = eval_options(report_opt, Schedule::parse(report_schedule));
      const Backends backends(report_opt, corpus);
      const auto table = summarize(corpus, methods, opts, backends.factory());
      out << summary_text(table);
      if (!report_out.empty()) {
        write_file(report_out + ".csv", render([&](std::ostream& s) {
                     write_summary_csv(s, table);
                   }));
        write_file(report_out + ".json", summary_json(table));
      }
    } else if (*trace_cmd) {
      const auto corpus = prepare(load_corpus(trace_opt.input));
      const Method method = Method::parse(trace_method);
      const auto opts = eval_options(trace_opt, Schedule::parse(trace_schedule));
      const Backends backends(trace_opt, corpus);
      const auto trace = survival_trace(corpus, method, opts, backends.factory());
      write_file(trace_out + ".csv", render([&](std::ostream& s) {
                   write_survival_csv(s, trace);
                 }));
      write_file(trace_out + ".json", survival_json(trace));
    } else if (*chart_cmd) {
      std::ifstream in(chart_in, std::ios::binary);
      if (!in) throw IoError("cannot open " + chart_in);
      std::stringstream buf;
      buf << in.rdbuf();
      const std::string svg = render_svg_chart(parse_csv(buf.str()), chart_spec);
      write_file(chart_out, svg);
    } else if (*synth_cmd) {
      const auto corpus = generate_synthetic(synth);
      save_corpus(synth_out, corpus);
    } else if (*matrix_cmd) {
      const auto corpus = prepare(load_corpus(matrix_opt.input));
      const Backends backends(matrix_opt, corpus);
      std::vector<std::string> lines(corpus.size());
      parallel_for(corpus.size(), matrix_opt.jobs, [&](std::size_t i) {
        const auto table = score_all(corpus[i], backends(corpus[i]));
        lines[i] = utility_matrix_json(expand_to_matrix(corpus[i], table)) + "\n";
      });
      std::string all;
      for (const auto& l : lines) all += l;
      write_file(matrix_out, all);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const BackendError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBackend;
  }
  return kExitOk;
}

}  // namespace pmbr
