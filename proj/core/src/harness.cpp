#include "crumbs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace crumbs {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(std::string(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad number for " + std::string(what) + ": '" + t + "'");
}

std::uint64_t parse_uint(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("bad integer for " + std::string(what) + ": '" + t +
                      "'");
  }
  return v;
}

bool parse_bool(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("bad boolean for " + std::string(what) + ": '" + t + "'");
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::optional<double> parse_optional(std::string_view s) {
  if (trim(s).empty()) return std::nullopt;
  return parse_double(s, "csv field");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string python_optional(const std::optional<double>& v) {
  if (!v) return "None";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

std::string python_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<double> default_tunings() {
  std::vector<double> t(12);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = std::pow(10.0, -1.5 + 5.0 * static_cast<double>(i) / 11.0);
  }
  return t;
}

void ExperimentSpec::validate() const {
  if (targets.empty()) throw ConfigError("no targets");
  if (methods.empty()) throw ConfigError("no methods");
  if (tunings.empty()) throw ConfigError("no tunings");
  const auto& known = target_names();
  for (const auto& t : targets) {
    if (std::find(known.begin(), known.end(), t) == known.end()) {
      throw ConfigError("unknown target '" + t + "'");
    }
  }
  for (const auto& m : methods) parse_method(m);
  for (double t : tunings) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw ConfigError("tunings must be positive");
    }
  }
  if (chain_length < 10) throw ConfigError("chain_length must be >= 10");
  if (replicate_count == 0) throw ConfigError("replicate_count must be >= 1");
  if (parallelism == 0) throw ConfigError("parallelism must be >= 1");
}

ExperimentSpec parse_experiment_spec(std::string_view text) {
  ExperimentSpec spec;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("duplicate key '" + key + "'");
    }
    auto list = [&] {
      std::vector<std::string> items;
      for (const auto& item : split(value, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) items.push_back(t);
      }
      return items;
    };
    if (key == "targets") {
      spec.targets = list();
    } else if (key == "methods") {
      spec.methods.clear();
      for (const auto& m : list()) {
        spec.methods.push_back(std::string(method_name(parse_method(m))));
      }
    } else if (key == "tunings") {
      spec.tunings.clear();
      for (const auto& t : list()) spec.tunings.push_back(parse_double(t, key));
    } else if (key == "chain_length") {
      spec.chain_length = parse_uint(value, key);
    } else if (key == "master_seed") {
      spec.master_seed = parse_uint(value, key);
    } else if (key == "replicate_count") {
      spec.replicate_count = parse_uint(value, key);
    } else if (key == "parallelism") {
      spec.parallelism = parse_uint(value, key);
    } else if (key == "record_timing") {
      spec.record_timing = parse_bool(value, key);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  return parse_experiment_spec(read_text(path));
}

std::vector<Cell> enumerate_cells(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  for (const auto& t : spec.targets) {
    for (const auto& m : spec.methods) {
      for (double tuning : spec.tunings) {
        for (std::size_t r = 0; r < spec.replicate_count; ++r) {
          Cell c;
          c.index = cells.size();
          c.target = t;
          c.method = parse_method(m);
          c.tuning = tuning;
          c.replicate = r;
          c.seed = derive_seed(spec.master_seed, c.index);
          cells.push_back(std::move(c));
        }
      }
    }
  }
  return cells;
}

ResultRow make_row(const Cell& cell, const ChainResult& chain,
                   bool record_timing) {
  ResultRow row;
  row.target = cell.target;
  row.method = std::string(method_name(cell.method));
  row.tuning = cell.tuning;
  row.seed = cell.seed;
  row.n = chain.n();
  if (!chain.ok() || chain.n() < 10) {
    row.error_flag = true;
    return row;
  }
  try {
    const FigureOfMerit fom = figures_of_merit(chain);
    row.tau = fom.tau;
    row.ess = fom.ess;
    row.evals_per_indep = fom.evals_per_indep;
    if (record_timing) row.seconds_per_indep = fom.seconds_per_indep;
    row.ci_low = fom.ci_low;
    row.ci_high = fom.ci_high;
    row.reliable = fom.reliable;
  } catch (const Error&) {
    row.error_flag = true;
  }
  return row;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      const SamplerConfig& base) {
  spec.validate();
  const std::vector<Cell> cells = enumerate_cells(spec);
  std::vector<ResultRow> rows(cells.size());

  auto run_cell = [&](const Cell& cell) {
    SamplerConfig config = base;
    config.method = cell.method;
    config.sigma_c = cell.tuning;
    try {
      Target target = make_target(cell.target);
      const ChainResult chain =
          run_chain(config, target, spec.chain_length, cell.seed);
      rows[cell.index] = make_row(cell, chain, spec.record_timing);
    } catch (const std::exception&) {
      ChainResult failed;
      failed.status = ChainStatus::max_crumbs_exceeded;
      rows[cell.index] = make_row(cell, failed, spec.record_timing);
    }
  };

  const std::size_t workers = std::min(spec.parallelism, cells.size());
  if (workers <= 1) {
    for (const auto& c : cells) run_cell(c);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          run_cell(cells[i]);
        }
      });
    }
  }
  return rows;
}

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.target + ',' + r.method + ',' + format_number(r.tuning) + ',' +
           std::to_string(r.seed) + ',' + std::to_string(r.n) + ',' +
           format_optional(r.tau) + ',' + format_optional(r.ess) + ',' +
           format_optional(r.evals_per_indep) + ',' +
           format_optional(r.seconds_per_indep) + ',' +
           format_optional(r.ci_low) + ',' + format_optional(r.ci_high) + ',' +
           (r.reliable ? (*r.reliable ? "true" : "false") : "") + ',' +
           (r.error_flag ? "true" : "false") + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_csv(std::string_view text) {
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty() || trim(lines.front()) != kCsvHeader) {
    throw ConfigError("csv: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto f = split(line, ',');
    if (f.size() != 13) {
      throw ConfigError("csv line " + std::to_string(i + 1) +
                        ": expected 13 fields");
    }
    ResultRow r;
    r.target = f[0];
    r.method = f[1];
    r.tuning = parse_double(f[2], "tuning");
    r.seed = parse_uint(f[3], "seed");
    r.n = parse_uint(f[4], "n");
    r.tau = parse_optional(f[5]);
    r.ess = parse_optional(f[6]);
    r.evals_per_indep = parse_optional(f[7]);
    r.seconds_per_indep = parse_optional(f[8]);
    r.ci_low = parse_optional(f[9]);
    r.ci_high = parse_optional(f[10]);
    if (!trim(f[11]).empty()) r.reliable = parse_bool(f[11], "reliable");
    r.error_flag = parse_bool(f[12], "error_flag");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_csv(const std::vector<ResultRow>& rows,
               const std::filesystem::path& path) {
  write_text(path, format_csv(rows));
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text(path));
}

std::string plot_script(const std::vector<ResultRow>& rows,
                        std::string_view image_path) {
  if (rows.empty()) throw InvalidInput("plot_script: no rows");
  std::vector<std::string> targets;
  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(targets.begin(), targets.end(), r.target) == targets.end()) {
      targets.push_back(r.target);
    }
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  auto list = [](const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += python_string(v[i]);
    }
    return s + "]";
  };

  std::ostringstream py;
  py << "#!/usr/bin/env python3\n"
        "# Generated by `crumbs report`. Draws log density evaluations per\n"
        "# independent sample against the tuning parameter: one row of panes\n"
        "# per target, one column per method, 95% interval bars, and `?` for\n"
        "# chains whose effective sample size is below four.\n"
        "import sys\n\n"
        "import matplotlib\n"
        "matplotlib.use(\"Agg\")\n"
        "import matplotlib.pyplot as plt\n\n";
  py << "TARGETS = " << list(targets) << "\n";
  py << "METHODS = " << list(methods) << "\n";
  py << "# target, method, tuning, evals_per_indep, ci_low, ci_high, reliable,"
        " error\n";
  py << "ROWS = [\n";
  for (const auto& r : rows) {
    py << "    (" << python_string(r.target) << ", "
       << python_string(r.method) << ", " << python_optional(r.tuning) << ", "
       << python_optional(r.evals_per_indep) << ", "
       << python_optional(r.ci_low) << ", " << python_optional(r.ci_high)
       << ", " << (r.reliable.value_or(false) ? "True" : "False") << ", "
       << (r.error_flag ? "True" : "False") << "),\n";
  }
  py << "]\n\n";
  py << "DEFAULT_OUTPUT = " << python_string(image_path) << "\n\n";
  py << R"PY(
def main(out):
    nrow, ncol = len(TARGETS), len(METHODS)
    fig, axes = plt.subplots(nrow, ncol, figsize=(3.2 * ncol, 2.6 * nrow),
                             squeeze=False, sharex=True)
    for i, target in enumerate(TARGETS):
        for j, method in enumerate(METHODS):
            ax = axes[i][j]
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_title("%s / %s" % (target, method), fontsize=8)
            for t, m, x, y, lo, hi, reliable, error in ROWS:
                if t != target or m != method or error or y is None:
                    continue
                if reliable:
                    if lo is not None and hi is not None:
                        ax.plot([x, x], [lo, hi], color="black", lw=0.8)
                    ax.plot([x], [y], "o", mfc="none", mec="black", ms=4)
                else:
                    ax.plot([x], [y], ls="none", marker="$?$", color="red",
                            ms=8)
            if i == nrow - 1:
                ax.set_xlabel("tuning parameter")
            if j == 0:
                ax.set_ylabel("evals per indep. sample")
    fig.tight_layout()
    fig.savefig(out, dpi=120)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else DEFAULT_OUTPUT)
)PY";
  return py.str();
}

void emit_plot_script(const std::vector<ResultRow>& rows,
                      const std::filesystem::path& path) {
  std::filesystem::path image = path;
  image.replace_extension(".png");
  write_text(path, plot_script(rows, image.string()));
}

}  // namespace crumbs
