// svct: sparse-view CT reconstruction toolkit command-line front end.
//
// Subcommands: phantom, degrade, train, reconstruct, evaluate, ablate,
// compare. Exit codes: 0 success, 2 usage/config error, 3 data error,
// 4 numeric failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "svct/svct.hpp"

namespace {

using namespace svct;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

/// Canonical key=value listing; doubles as the config-hash input and the
/// effective-config echo written next to each primary output.
class ConfigText {
 public:
  explicit ConfigText(const std::string& subcommand) {
    add("subcommand", subcommand);
  }
  void add(const std::string& key, const std::string& value) {
    text_ += key + "=" + value + "\n";
  }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::uint64_t value) {
    add(key, std::to_string(value));
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

void echo_config(const std::string& primary_out, const ConfigText& cfg) {
  if (!primary_out.empty())
    write_file_atomic(primary_out + ".config.txt", cfg.str());
}

struct GeometryFlags {
  int detectors = 672;
  double sdd = 59.5;
  double sid = 42.5;
  double spacing = 0.0;  // 0 = derive from grid coverage
  std::string severity_path;
};

void add_geometry_flags(CLI::App* cmd, GeometryFlags& g) {
  cmd->add_option("--detectors", g.detectors, "Detector element count");
  cmd->add_option("--sdd", g.sdd, "Source-to-detector distance, cm");
  cmd->add_option("--sid", g.sid, "Source-to-isocenter distance, cm");
  cmd->add_option("--spacing", g.spacing,
                  "Detector element spacing, cm (0 = auto from grid coverage)");
  cmd->add_option("--severity-map", g.severity_path,
                  "File of whitespace-separated view counts, dense to sparse");
}

FanSpec fan_from(const GeometryFlags& g) {
  FanSpec f;
  f.source_to_detector = g.sdd;
  f.source_to_isocenter = g.sid;
  f.num_detectors = g.detectors;
  f.detector_spacing = g.spacing;
  return f;
}

SeverityMap severity_from(const GeometryFlags& g) {
  return g.severity_path.empty() ? SeverityMap::defaults()
                                 : load_severity_map(g.severity_path);
}

void describe_geometry(ConfigText& cfg, const GeometryFlags& g,
                       const SeverityMap& sev) {
  cfg.add("detectors", g.detectors);
  cfg.add("sdd", g.sdd);
  cfg.add("sid", g.sid);
  cfg.add("spacing", g.spacing);
  std::string views;
  for (std::size_t i = 0; i < sev.views_per_level.size(); ++i)
    views += (i ? "," : "") + std::to_string(sev.views_per_level[i]);
  cfg.add("severity", views);
}

std::unique_ptr<Restorer> make_restorer(const std::string& kind,
                                        const std::string& checkpoint,
                                        const Image* oracle_gt) {
  if (kind == "identity")
    return std::make_unique<IdentityRestorer>();
  if (kind == "oracle") {
    if (!oracle_gt)
      throw ConfigError("oracle restorer needs a ground-truth image");
    return std::make_unique<OracleRestorer>(*oracle_gt);
  }
  if (kind == "reference") {
    if (checkpoint.empty())
      throw ConfigError("reference restorer needs --checkpoint");
    return std::make_unique<ReferenceRestorer>(load_restorer(checkpoint));
  }
  throw ConfigError("unknown restorer kind: " + kind);
}

void write_csv(const std::string& path, const std::string& body) {
  if (path.empty())
    std::cout << body;
  else
    write_file_atomic(path, body);
}

std::string trace_csv(const SampleTrace& trace, const ConfigText& cfg) {
  std::ostringstream os;
  os << config_hash_comment(cfg.str()) << "\n";
  os << "step,level_before,level_after,ssim_prev,reset_flag\n";
  for (const StepRecord& s : trace.steps) {
    os << s.step << "," << s.level_before << "," << s.level_after << ",";
    if (!std::isnan(s.ssim_prev))
      os << fmt(s.ssim_prev);
    os << "," << (s.reset ? 1 : 0) << "\n";
  }
  if (trace.early_termination)
    os << "# early_termination 1\n";
  return os.str();
}

// ---------------------------------------------------------------------------

void register_phantom(CLI::App& app) {
  auto cmd = app.add_subcommand("phantom", "Generate a synthetic phantom");
  auto kind = std::make_shared<std::string>("shepp");
  auto size = std::make_shared<int>(256);
  auto height = std::make_shared<int>(0);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto n_ellipses = std::make_shared<int>(6);
  auto pixel_size = std::make_shared<double>(0.0);
  auto out = std::make_shared<std::string>();
  auto png = std::make_shared<std::string>();
  cmd->add_option("--kind", *kind, "Phantom kind")
      ->check(CLI::IsMember({"shepp", "ellipses"}));
  cmd->add_option("--size", *size, "Width in pixels (and height unless set)");
  cmd->add_option("--height", *height, "Height in pixels");
  cmd->add_option("--seed", *seed, "RNG seed for random phantoms");
  cmd->add_option("--ellipses", *n_ellipses, "Ellipse count for kind=ellipses");
  cmd->add_option("--pixel-size", *pixel_size, "cm per pixel (0 = 40cm FOV)");
  cmd->add_option("--out", *out, "Output image path")->required();
  cmd->add_option("--png", *png, "Also export a windowed PNG here");
  cmd->callback([=] {
    const int h = *height > 0 ? *height : *size;
    const Image img = *kind == "shepp"
                          ? shepp_logan(*size, h, *pixel_size)
                          : random_ellipse_phantom(*seed, *size, h,
                                                   *n_ellipses, *pixel_size);
    write_image(*out, img);
    if (!png->empty())
      write_png(*png, img);
    ConfigText cfg("phantom");
    cfg.add("kind", *kind);
    cfg.add("size", *size);
    cfg.add("height", h);
    cfg.add("seed", *seed);
    cfg.add("ellipses", *n_ellipses);
    cfg.add("pixel_size", img.pixel_size);
    echo_config(*out, cfg);
  });
}

void register_degrade(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "degrade", "Apply the angular-subsampling degradation operator");
  auto level = std::make_shared<int>(-1);
  auto views = std::make_shared<int>(0);
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto png = std::make_shared<std::string>();
  auto geo = std::make_shared<GeometryFlags>();
  cmd->add_option("--level", *level, "Severity level (0 = identity)");
  cmd->add_option("--views", *views,
                  "Override: project at exactly this many views");
  cmd->add_option("--in", *in, "Input image")->required();
  cmd->add_option("--out", *out, "Output image")->required();
  cmd->add_option("--png", *png, "Also export a windowed PNG here");
  add_geometry_flags(cmd, *geo);
  cmd->callback([=] {
    const Image img = read_image(*in);
    const SeverityMap sev = severity_from(*geo);
    const DegradeConfig dcfg =
        DegradeConfig::for_image(img, fan_from(*geo), sev);
    Image result;
    if (*views > 0)
      result = resample_through_views(img, *views, dcfg);
    else if (*level >= 0)
      result = degrade(img, *level, dcfg);
    else
      throw ConfigError("degrade: need --level or --views");
    write_image(*out, result);
    if (!png->empty())
      write_png(*png, result);
    ConfigText cfg("degrade");
    cfg.add("in", *in);
    cfg.add("level", *level);
    cfg.add("views", *views);
    describe_geometry(cfg, *geo, sev);
    echo_config(*out, cfg);
  });
}

struct TrainFileConfig {
  int images = 40;
  int size = 64;
  int ellipses = 6;
  std::uint64_t data_seed = 1000;
  TrainConfig train;
  GeometryFlags geo;
  std::vector<int> severity;  // empty = defaults
};

TrainFileConfig parse_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("train config: cannot open " + path);
  TrainFileConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.resize(hash);
    std::string trimmed;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch)))
        trimmed += ch;
    if (trimmed.empty())
      continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw DataError("train config line " + std::to_string(line_no) +
                      ": expected key=value");
    const std::string key = trimmed.substr(0, eq);
    const std::string value = trimmed.substr(eq + 1);
    try {
      if (key == "images") c.images = std::stoi(value);
      else if (key == "size") c.size = std::stoi(value);
      else if (key == "ellipses") c.ellipses = std::stoi(value);
      else if (key == "data_seed") c.data_seed = std::stoull(value);
      else if (key == "seed") c.train.seed = std::stoull(value);
      else if (key == "epochs") c.train.epochs = std::stoi(value);
      else if (key == "batch") c.train.batch_size = std::stoi(value);
      else if (key == "lr") c.train.learning_rate = std::stod(value);
      else if (key == "momentum") c.train.momentum = std::stod(value);
      else if (key == "gamma") c.train.gamma = std::stod(value);
      else if (key == "ema_period") c.train.ema_period = std::stoi(value);
      else if (key == "epct") c.train.use_epct = std::stoi(value) != 0;
      else if (key == "adam_beta1") c.train.adam_beta1 = std::stod(value);
      else if (key == "adam_beta2") c.train.adam_beta2 = std::stod(value);
      else if (key == "adam_lr") c.train.adam_learning_rate = std::stod(value);
      else if (key == "detectors") c.geo.detectors = std::stoi(value);
      else if (key == "sdd") c.geo.sdd = std::stod(value);
      else if (key == "sid") c.geo.sid = std::stod(value);
      else if (key == "spacing") c.geo.spacing = std::stod(value);
      else if (key == "severity") {
        c.severity.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
          c.severity.push_back(std::stoi(item));
      } else {
        throw ConfigError("train config: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw DataError("train config: bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw DataError("train config: value out of range for '" + key + "'");
    }
  }
  return c;
}

void register_train(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "train", "Train the reference restorer on procedural phantoms");
  auto config_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto ema_out = std::make_shared<std::string>();
  auto history = std::make_shared<std::string>();
  cmd->add_option("--config", *config_path, "key=value training config file")
      ->required();
  cmd->add_option("--out", *out, "Checkpoint output path")->required();
  cmd->add_option("--ema-out", *ema_out, "Also save the EMA weights here");
  cmd->add_option("--history", *history,
                  "Loss history CSV (default <out>.history.csv)");
  cmd->callback([=] {
    const TrainFileConfig c = parse_train_config(*config_path);
    SeverityMap sev = SeverityMap::defaults();
    if (!c.severity.empty()) {
      sev.views_per_level = c.severity;
      sev.validate();
    }
    std::vector<Image> dataset;
    dataset.reserve(static_cast<std::size_t>(c.images));
    for (int i = 0; i < c.images; ++i)
      dataset.push_back(random_ellipse_phantom(c.data_seed + static_cast<std::uint64_t>(i),
                                               c.size, c.size, c.ellipses));
    const DegradeConfig dcfg =
        DegradeConfig::for_image(dataset.front(), fan_from(c.geo), sev);
    const TrainResult result = train(dataset, c.train, dcfg);

    ConfigText cfg("train");
    cfg.add("config", *config_path);
    cfg.add("images", c.images);
    cfg.add("size", c.size);
    cfg.add("ellipses", c.ellipses);
    cfg.add("data_seed", c.data_seed);
    cfg.add("seed", c.train.seed);
    cfg.add("epochs", c.train.epochs);
    cfg.add("batch", c.train.batch_size);
    cfg.add("lr", c.train.learning_rate);
    cfg.add("momentum", c.train.momentum);
    cfg.add("gamma", c.train.gamma);
    cfg.add("ema_period", c.train.ema_period);
    cfg.add("epct", c.train.use_epct ? 1 : 0);
    describe_geometry(cfg, c.geo, sev);

    save_restorer(*out, result.state);
    if (!ema_out->empty()) {
      RestorerState ema_state{result.state.arch, result.ema.theta_ema};
      save_restorer(*ema_out, ema_state);
    }
    std::ostringstream os;
    os << config_hash_comment(cfg.str()) << "\n";
    os << "iteration,loss_restore,loss_compose\n";
    for (const TrainHistoryRow& row : result.history) {
      os << row.iteration << "," << fmt(row.loss_restore) << ",";
      if (!std::isnan(row.loss_compose))
        os << fmt(row.loss_compose);
      os << "\n";
    }
    write_csv(history->empty() ? *out + ".history.csv" : *history, os.str());
    echo_config(*out, cfg);
    if (result.diverged)
      throw NumericError("training diverged; partial history saved");
  });
}

void register_reconstruct(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "reconstruct", "Multi-step restoration of a degraded image");
  auto strategy = std::make_shared<std::string>("spdps");
  auto views = std::make_shared<int>(0);
  auto level = std::make_shared<int>(0);
  auto nfe = std::make_shared<int>(10);
  auto tau = std::make_shared<double>(0.97);
  auto m = std::make_shared<int>(4);
  auto checkpoint = std::make_shared<std::string>();
  auto restorer_kind = std::make_shared<std::string>();
  auto oracle_image = std::make_shared<std::string>();
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto trace_path = std::make_shared<std::string>();
  auto png = std::make_shared<std::string>();
  auto geo = std::make_shared<GeometryFlags>();
  cmd->add_option("--strategy", *strategy, "Sampling strategy")
      ->check(CLI::IsMember({"sequential", "spdps"}));
  cmd->add_option("--views", *views, "Input view count (mapped to a level)");
  cmd->add_option("--level", *level, "Input severity level (alternative)");
  cmd->add_option("--nfe", *nfe, "Restorer-call budget N for spdps");
  cmd->add_option("--tau", *tau, "SSIM reset threshold");
  cmd->add_option("--m", *m, "Detail-refinement steps");
  cmd->add_option("--checkpoint", *checkpoint, "Reference restorer weights");
  cmd->add_option("--restorer", *restorer_kind,
                  "Restorer kind (default: reference when --checkpoint given)")
      ->check(CLI::IsMember({"oracle", "identity", "reference"}));
  cmd->add_option("--oracle-image", *oracle_image,
                  "Ground truth for the oracle restorer");
  cmd->add_option("--in", *in, "Degraded input image")->required();
  cmd->add_option("--out", *out, "Output image")->required();
  cmd->add_option("--trace", *trace_path, "Per-step trace CSV");
  cmd->add_option("--png", *png, "Also export a windowed PNG here");
  add_geometry_flags(cmd, *geo);
  cmd->callback([=] {
    const Image x = read_image(*in);
    const SeverityMap sev = severity_from(*geo);
    const DegradeConfig dcfg = DegradeConfig::for_image(x, fan_from(*geo), sev);

    int T = *level;
    if (*views > 0) {
      T = sev.level_for_views(*views);
      if (T == 0)
        throw ConfigError("reconstruct: " + std::to_string(*views) +
                          " views is not a level of the severity map");
    }
    if (T < 1)
      throw ConfigError("reconstruct: need --views or --level >= 1");

    std::string kind = *restorer_kind;
    if (kind.empty())
      kind = checkpoint->empty() ? "identity" : "reference";
    Image oracle_gt;
    const Image* gt_ptr = nullptr;
    if (kind == "oracle") {
      if (oracle_image->empty())
        throw ConfigError("reconstruct: --restorer oracle needs --oracle-image");
      oracle_gt = read_image(*oracle_image);
      gt_ptr = &oracle_gt;
    }
    const std::unique_ptr<Restorer> restorer =
        make_restorer(kind, *checkpoint, gt_ptr);

    ConfigText cfg("reconstruct");
    cfg.add("strategy", *strategy);
    cfg.add("in", *in);
    cfg.add("level", T);
    cfg.add("nfe", *nfe);
    cfg.add("tau", *tau);
    cfg.add("m", *m);
    cfg.add("restorer", kind);
    cfg.add("checkpoint", *checkpoint);
    describe_geometry(cfg, *geo, sev);

    SampleTrace trace;
    if (*strategy == "sequential") {
      trace = sequential_sample(x, T, *restorer, dcfg);
    } else {
      SpdpsConfig scfg;
      scfg.total_steps = *nfe;
      scfg.refine_steps = *m;
      scfg.tau = *tau;
      trace = spdps_sample(x, T, *restorer, dcfg, scfg);
    }
    write_image(*out, trace.final);
    if (!png->empty())
      write_png(*png, trace.final);
    if (!trace_path->empty())
      write_csv(*trace_path, trace_csv(trace, cfg));
    echo_config(*out, cfg);
  });
}

void register_evaluate(CLI::App& app) {
  auto cmd = app.add_subcommand("evaluate",
                                "Image-quality metrics against a reference");
  auto ref = std::make_shared<std::string>();
  auto test = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--ref", *ref, "Reference image")->required();
  cmd->add_option("--test", *test, "Image under test")->required();
  cmd->add_option("--out", *out, "CSV output path (default stdout)");
  cmd->callback([=] {
    const Image a = read_image(*ref);
    const Image b = read_image(*test);
    ConfigText cfg("evaluate");
    cfg.add("ref", *ref);
    cfg.add("test", *test);
    const double rmse = rmse_hu(a, b);
    std::ostringstream os;
    os << config_hash_comment(cfg.str()) << "\n";
    os << "rmse_hu,psnr_db,ssim\n";
    os << fmt(rmse) << "," << fmt(psnr_hu(a, b)) << ","
       << fmt(compute_ssim(a, b)) << "\n";
    if (rmse == 0.0)
      os << "# psnr_exact 1\n";
    write_csv(*out, os.str());
    echo_config(*out, cfg);
  });
}

/// Shared state for the experiment subcommands (compare, ablate): a clean
/// image, its degraded input at the target level, and a restorer.
struct ExperimentInputs {
  Image clean;
  Image degraded;
  int level = 0;
  DegradeConfig dcfg;
  std::unique_ptr<Restorer> restorer;
};

struct ExperimentFlags {
  std::string in;
  std::string phantom_kind = "shepp";
  int size = 128;
  std::uint64_t seed = 0;
  int n_ellipses = 6;
  int views = 18;
  std::string restorer_kind = "identity";
  std::string checkpoint;
  GeometryFlags geo;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--in", f.in, "Clean reference image (else a phantom)");
  cmd->add_option("--phantom", f.phantom_kind, "Phantom kind when no --in")
      ->check(CLI::IsMember({"shepp", "ellipses"}));
  cmd->add_option("--size", f.size, "Phantom size in pixels");
  cmd->add_option("--seed", f.seed, "Phantom RNG seed");
  cmd->add_option("--ellipses", f.n_ellipses, "Ellipse count for random phantoms");
  cmd->add_option("--views", f.views, "Input sparse-view count");
  cmd->add_option("--restorer", f.restorer_kind, "Restorer kind")
      ->check(CLI::IsMember({"oracle", "identity", "reference"}));
  cmd->add_option("--checkpoint", f.checkpoint, "Reference restorer weights");
  add_geometry_flags(cmd, f.geo);
}

ExperimentInputs prepare_experiment(const ExperimentFlags& f, ConfigText& cfg) {
  ExperimentInputs e;
  e.clean = f.in.empty()
                ? (f.phantom_kind == "shepp"
                       ? shepp_logan(f.size, f.size)
                       : random_ellipse_phantom(f.seed, f.size, f.size,
                                                f.n_ellipses))
                : read_image(f.in);
  const SeverityMap sev = severity_from(f.geo);
  e.dcfg = DegradeConfig::for_image(e.clean, fan_from(f.geo), sev);
  e.level = sev.level_for_views(f.views);
  if (e.level == 0)
    throw ConfigError(std::to_string(f.views) +
                      " views is not a level of the severity map");
  e.degraded = degrade(e.clean, e.level, e.dcfg);
  e.restorer = make_restorer(f.restorer_kind, f.checkpoint, &e.clean);

  cfg.add("in", f.in);
  cfg.add("phantom", f.phantom_kind);
  cfg.add("size", f.size);
  cfg.add("seed", f.seed);
  cfg.add("ellipses", f.n_ellipses);
  cfg.add("views", f.views);
  cfg.add("restorer", f.restorer_kind);
  cfg.add("checkpoint", f.checkpoint);
  describe_geometry(cfg, f.geo, sev);
  return e;
}

void append_metrics_row(std::ostringstream& os, const Image& clean,
                        const SampleTrace& trace) {
  os << trace.nfe << "," << fmt(rmse_hu(clean, trace.final)) << ","
     << fmt(psnr_hu(clean, trace.final)) << ","
     << fmt(compute_ssim(clean, trace.final)) << "\n";
}

void register_compare(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "compare", "Run sampling strategies side by side on one input");
  auto flags = std::make_shared<ExperimentFlags>();
  auto strategies =
      std::make_shared<std::vector<std::string>>(std::vector<std::string>{
          "sequential", "spdps"});
  auto nfe = std::make_shared<int>(10);
  auto tau = std::make_shared<double>(0.97);
  auto m = std::make_shared<int>(4);
  auto out = std::make_shared<std::string>();
  cmd->add_option("--strategies", *strategies, "Comma-separated strategy list")
      ->delimiter(',')
      ->check(CLI::IsMember({"sequential", "spdps"}));
  cmd->add_option("--nfe", *nfe, "Restorer-call budget for spdps");
  cmd->add_option("--tau", *tau, "SSIM reset threshold");
  cmd->add_option("--m", *m, "Detail-refinement steps");
  cmd->add_option("--out", *out, "CSV output path (default stdout)");
  add_experiment_flags(cmd, *flags);
  cmd->callback([=] {
    ConfigText cfg("compare");
    cfg.add("nfe", *nfe);
    cfg.add("tau", *tau);
    cfg.add("m", *m);
    ExperimentInputs e = prepare_experiment(*flags, cfg);

    std::ostringstream os;
    os << config_hash_comment(cfg.str()) << "\n";
    os << "strategy,nfe,rmse_hu,psnr_db,ssim\n";
    for (const std::string& strategy : *strategies) {
      SampleTrace trace;
      if (strategy == "sequential") {
        trace = sequential_sample(e.degraded, e.level, *e.restorer, e.dcfg);
      } else {
        SpdpsConfig scfg;
        scfg.total_steps = *nfe;
        scfg.refine_steps = *m;
        scfg.tau = *tau;
        trace = spdps_sample(e.degraded, e.level, *e.restorer, e.dcfg, scfg);
      }
      os << strategy << ",";
      append_metrics_row(os, e.clean, trace);
    }
    write_csv(*out, os.str());
    echo_config(*out, cfg);
  });
}

void register_ablate(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "ablate", "Sweep the SPDPS threshold and refinement-step grid");
  auto flags = std::make_shared<ExperimentFlags>();
  auto taus = std::make_shared<std::vector<double>>(std::vector<double>{0.97});
  auto ms = std::make_shared<std::vector<int>>(std::vector<int>{4});
  auto nfe = std::make_shared<int>(10);
  auto out = std::make_shared<std::string>();
  cmd->add_option("--tau", *taus, "Comma-separated threshold list")
      ->delimiter(',');
  cmd->add_option("--m", *ms, "Comma-separated refinement-step list")
      ->delimiter(',');
  cmd->add_option("--nfe", *nfe, "Restorer-call budget");
  cmd->add_option("--out", *out, "CSV output path (default stdout)");
  add_experiment_flags(cmd, *flags);
  cmd->callback([=] {
    ConfigText cfg("ablate");
    cfg.add("nfe", *nfe);
    {
      std::string s;
      for (std::size_t i = 0; i < taus->size(); ++i)
        s += (i ? "," : "") + fmt((*taus)[i]);
      cfg.add("tau", s);
      s.clear();
      for (std::size_t i = 0; i < ms->size(); ++i)
        s += (i ? "," : "") + std::to_string((*ms)[i]);
      cfg.add("m", s);
    }
    ExperimentInputs e = prepare_experiment(*flags, cfg);

    std::ostringstream os;
    os << config_hash_comment(cfg.str()) << "\n";
    os << "tau,m,nfe,rmse_hu,psnr_db,ssim\n";
    for (double tau : *taus) {
      for (int m : *ms) {
        SpdpsConfig scfg;
        scfg.total_steps = *nfe;
        scfg.refine_steps = m;
        scfg.tau = tau;
        const SampleTrace trace =
            spdps_sample(e.degraded, e.level, *e.restorer, e.dcfg, scfg);
        os << fmt(tau) << "," << m << ",";
        append_metrics_row(os, e.clean, trace);
      }
    }
    write_csv(*out, os.str());
    echo_config(*out, cfg);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-view CT reconstruction toolkit"};
  app.require_subcommand(1);
  register_phantom(app);
  register_degrade(app);
  register_train(app);
  register_reconstruct(app);
  register_evaluate(app);
  register_ablate(app);
  register_compare(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const svct::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const svct::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const svct::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
