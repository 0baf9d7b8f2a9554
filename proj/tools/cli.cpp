#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include <hessvessel/checkpoint.hpp>
#include <hessvessel/clustering.hpp>
#include <hessvessel/error.hpp>
#include <hessvessel/frangi.hpp>
#include <hessvessel/metrics.hpp>
#include <hessvessel/nifti.hpp>
#include <hessvessel/phantom.hpp>
#include <hessvessel/rng.hpp>
#include <hessvessel/train.hpp>

#include "pipeline_config.hpp"

namespace hessvessel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  PipelineConfig config;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be stored
// by index; the exception of the lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool is_nifti(const fs::path& p) {
  const std::string s = p.filename().string();
  auto ends = [&](const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".nii") || ends(".nii.gz");
}

// Brain mask given explicitly, or found under paths.mask_dir with the input's file name.
std::optional<BinaryMask> brain_mask(const std::string& explicit_path, const fs::path& input,
                                     const PipelineConfig& cfg) {
  if (!explicit_path.empty()) return read_mask(explicit_path);
  if (cfg.paths.mask_dir) {
    const fs::path candidate = *cfg.paths.mask_dir / input.filename();
    if (fs::exists(candidate)) return read_mask(candidate);
  }
  return std::nullopt;
}

fs::path in_output_dir(const fs::path& p, const PipelineConfig& cfg) {
  if (p.is_absolute() || !cfg.paths.output_dir) return p;
  return *cfg.paths.output_dir / p;
}

// ---- cluster -------------------------------------------------------------

struct ClusterArgs {
  std::vector<std::string> inputs;
  std::optional<std::size_t> bins;
  std::optional<std::size_t> k;
  std::string out;
};

int cmd_cluster(const ClusterArgs& a, const Common& c, std::ostream& out) {
  std::vector<fs::path> inputs(a.inputs.begin(), a.inputs.end());
  if (inputs.empty() && c.config.paths.input_dir) {
    for (const auto& e : fs::directory_iterator(*c.config.paths.input_dir)) {
      if (e.is_regular_file() && is_nifti(e.path())) inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
  }
  if (inputs.size() < 2) throw ParameterError("cluster needs at least two input volumes");
  const std::size_t bins = a.bins.value_or(c.config.clustering.bins);
  const auto k = a.k ? a.k : c.config.clustering.k;
  if (!k) throw ParameterError("cluster count is required (-k)");
  if (*k < 1 || *k > inputs.size()) {
    throw ParameterError("cluster count " + std::to_string(*k) + " outside [1, " +
                         std::to_string(inputs.size()) + "]");
  }

  std::vector<Volume> volumes(inputs.size());
  parallel_for(inputs.size(), c.jobs, [&](std::size_t i) { volumes[i] = read_nifti(inputs[i]); });
  // Shared bin edges so histograms are comparable.
  double upper = 0.0;
  for (const auto& v : volumes) {
    for (float x : v.data()) upper = std::max(upper, static_cast<double>(x));
  }
  if (!(upper > 0.0)) throw DegenerateInputError("no input volume has positive intensities");
  std::vector<IntensityHistogram> hists(inputs.size());
  parallel_for(inputs.size(), c.jobs, [&](std::size_t i) {
    try {
      hists[i] = intensity_histogram(volumes[i], bins, upper);
    } catch (const DegenerateInputError& e) {
      throw DegenerateInputError(inputs[i].string() + ": " + e.what());
    }
  });
  const DistanceMatrix dm = distance_matrix(hists);
  const ClusterAssignment ca = ward_cluster(dm, *k);

  std::vector<std::string> names;
  for (const auto& p : inputs) names.push_back(p.string());
  fs::path dir = a.out.empty() ? c.config.paths.output_dir.value_or(".") : fs::path(a.out);
  fs::create_directories(dir);
  write_text(dir / "distances.json", to_json(dm, names));
  write_text(dir / "clusters.json", to_json(ca, names));
  out << "clustered " << names.size() << " volumes into " << ca.k << " clusters; wrote "
      << (dir / "distances.json").string() << " and " << (dir / "clusters.json").string() << "\n";
  return kOk;
}

// ---- frangi --------------------------------------------------------------

struct FrangiArgs {
  std::string input;
  std::string mask;
  std::optional<double> alpha, beta, gamma;
  std::vector<double> scales;
  std::string threshold = "otsu";
  std::size_t bins = 256;
  std::string out;
  std::string mask_out;
};

int cmd_frangi(const FrangiArgs& a, const Common& c, std::ostream& out) {
  FrangiParams params = c.config.frangi;
  if (a.alpha) params.alpha = *a.alpha;
  if (a.beta) params.beta = *a.beta;
  if (a.gamma) params.gamma = *a.gamma;
  if (!a.scales.empty()) params.scales = a.scales;
  validate(params);

  std::optional<double> fixed;
  const bool otsu = a.threshold == "otsu";
  if (!otsu && a.threshold != "none") {
    try {
      std::size_t used = 0;
      fixed = std::stod(a.threshold, &used);
      if (used != a.threshold.size()) throw std::invalid_argument(a.threshold);
    } catch (const std::logic_error&) {
      throw ParameterError("--threshold must be 'otsu', 'none' or a number, got '" + a.threshold + "'");
    }
  }
  if ((otsu || fixed) && a.mask_out.empty()) {
    throw ParameterError("--mask-out is required when thresholding");
  }

  const Volume vol = read_nifti(a.input);
  const auto brain = brain_mask(a.mask, a.input, c.config);
  Volume v = frangi_vesselness(vol, params);
  if (brain) v = apply_mask(v, *brain);
  const fs::path vout = in_output_dir(a.out, c.config);
  write_nifti(v, vout);
  out << "wrote vesselness " << vout.string() << "\n";

  if (otsu || fixed) {
    BinaryMask m(v.dims());
    if (otsu) {
      const auto [lo, hi] = std::minmax_element(v.data().begin(), v.data().end());
      // A constant response (e.g. a constant input) has no vessels.
      if (*lo < *hi) {
        const double t = otsu_threshold(v, a.bins);
        m = binarize(v, t);
        out << "otsu threshold " << std::setprecision(9) << t << "\n";
      }
    } else {
      m = binarize(v, *fixed);
    }
    const fs::path mout = in_output_dir(a.mask_out, c.config);
    write_mask(m, mout, vol.spacing());
    out << "wrote mask " << mout.string() << " (" << m.count() << " voxels)\n";
  }
  return kOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string checkpoint_out;
  std::string history_out;
  std::optional<std::size_t> epochs, patch_size, patches_per_volume;
  bool no_augment = false;
};

struct Manifest {
  std::vector<std::pair<fs::path, fs::path>> pairs;
  std::optional<std::pair<fs::path, fs::path>> validation;
};

Manifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw SpecError(path.string() + ": manifest is not valid JSON: " + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  auto pair_of = [&](const json& j, const std::string& where) {
    if (!j.is_object()) throw SpecError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
      if (key != "volume" && key != "label") throw SpecError(where + ": unknown key '" + key + "'");
    }
    if (!j.contains("volume") || !j.contains("label") || !j["volume"].is_string() ||
        !j["label"].is_string()) {
      throw SpecError(where + " needs string fields 'volume' and 'label'");
    }
    return std::make_pair(resolve(j["volume"].get<std::string>()),
                          resolve(j["label"].get<std::string>()));
  };
  if (!doc.is_object()) throw SpecError("manifest must be a JSON object");
  Manifest m;
  for (const auto& [key, value] : doc.items()) {
    if (key == "pairs") {
      if (!value.is_array()) throw SpecError("manifest 'pairs' must be an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        m.pairs.push_back(pair_of(value[i], "pairs[" + std::to_string(i) + "]"));
      }
    } else if (key == "validation") {
      m.validation = pair_of(value, "validation");
    } else {
      throw SpecError("manifest: unknown key '" + key + "'");
    }
  }
  if (m.pairs.empty()) throw ParameterError(path.string() + ": manifest lists no training pairs");
  return m;
}

LabeledVolume load_pair(const std::pair<fs::path, fs::path>& p, const std::string& name) {
  LabeledVolume lv{read_nifti(p.first), read_mask(p.second)};
  if (lv.volume.dims() != lv.mask.dims()) {
    throw ShapeError(name + " (" + p.first.string() + ", " + p.second.string() +
                     "): volume and label dims differ");
  }
  return lv;
}

std::string history_line(const EpochRecord& r) {
  json j{{"epoch", r.epoch}, {"lr", r.lr}, {"mean_loss", r.mean_loss}};
  if (r.val_dsc) j["val_dsc"] = *r.val_dsc;
  return j.dump();
}

void write_history(const fs::path& path, const std::vector<EpochRecord>& history) {
  std::string text;
  for (const auto& r : history) text += history_line(r) + "\n";
  write_text(path, text);
}

int cmd_train(const TrainArgs& a, const Common& c, std::ostream& out) {
  TrainConfig tc = c.config.training;
  if (c.seed) tc.seed = *c.seed;
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.patch_size) tc.patch_size = *a.patch_size;
  if (a.patches_per_volume) tc.patches_per_volume = *a.patches_per_volume;
  if (a.no_augment) tc.augment = false;
  const HessNetConfig& net_cfg = c.config.network;
  validate(tc, net_cfg);

  fs::path ckpt = a.checkpoint_out.empty() ? c.config.paths.checkpoint.value_or("")
                                           : fs::path(a.checkpoint_out);
  if (ckpt.empty()) throw ParameterError("--checkpoint-out is required");
  ckpt = in_output_dir(ckpt, c.config);
  const fs::path hist = a.history_out.empty() ? ckpt.parent_path() / "history.jsonl"
                                              : in_output_dir(a.history_out, c.config);

  const Manifest m = read_manifest(a.manifest);
  std::vector<LabeledVolume> pairs(m.pairs.size());
  parallel_for(m.pairs.size(), c.jobs, [&](std::size_t i) {
    pairs[i] = load_pair(m.pairs[i], "pair " + std::to_string(i));
  });
  TrainOptions opts;
  if (m.validation) opts.validation = load_pair(*m.validation, "validation pair");
  opts.on_epoch = [&](const EpochRecord& r) { out << history_line(r) << "\n" << std::flush; };

  auto save = [&](const TrainResult& r) {
    if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
    save_checkpoint(Checkpoint{net_cfg, r.params, r.opt, tc.seed, r.history.size()}, ckpt);
    write_history(hist, r.history);
  };
  TrainResult result;
  try {
    result = train(pairs, net_cfg, tc, c.config.loss, opts);
  } catch (const TrainingAborted& e) {
    save(e.last_good());
    throw NumericError(std::string(e.what()) + "; last good state saved to " + ckpt.string());
  }
  save(result);
  out << "wrote checkpoint " << ckpt.string() << " (" << result.params.size()
      << " parameters) and history " << hist.string() << "\n";
  if (opts.validation) {
    const Volume prob = forward(result.params, net_cfg, z_normalize(opts.validation->volume));
    const auto report = evaluate(binarize(prob, tc.threshold), opts.validation->mask,
                                 std::nullopt, result.params.size());
    out << to_json(report) << "\n";
  }
  return kOk;
}

// ---- segment -------------------------------------------------------------

struct SegmentArgs {
  std::string input;
  std::string checkpoint;
  std::string mask;
  std::optional<double> threshold;
  std::string prob_out;
  std::string mask_out;
};

int cmd_segment(const SegmentArgs& a, const Common& c, std::ostream& out) {
  const fs::path ckpt =
      a.checkpoint.empty() ? c.config.paths.checkpoint.value_or("") : fs::path(a.checkpoint);
  if (ckpt.empty()) throw ParameterError("--checkpoint is required");
  const double threshold = a.threshold.value_or(c.config.training.threshold);
  if (!(threshold > 0.0 && threshold < 1.0)) throw ParameterError("--threshold must lie in (0, 1)");

  const Checkpoint cp = load_checkpoint(ckpt);
  const Volume vol = read_nifti(a.input);
  const auto brain = brain_mask(a.mask, a.input, c.config);
  if (brain) require_same_dims(vol.dims(), brain->dims(), "segment brain mask");

  Volume prob = forward(cp.params, cp.config, z_normalize(vol));
  prob = Volume(prob.dims(), vol.spacing(), std::vector<float>(prob.data().begin(), prob.data().end()));
  BinaryMask seg = binarize(prob, threshold);
  if (brain) seg = apply_mask(seg, *brain);

  const fs::path pout = in_output_dir(a.prob_out, c.config);
  const fs::path mout = in_output_dir(a.mask_out, c.config);
  write_nifti(prob, pout);
  write_mask(seg, mout, vol.spacing());
  out << "wrote probabilities " << pout.string() << " and mask " << mout.string() << " ("
      << seg.count() << " voxels)\n";
  return kOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::optional<std::uint64_t> n_params;
  bool mm = false;
  std::string out;
};

int cmd_eval(const EvalArgs& a, const Common& c, std::ostream& out) {
  const Volume gt_vol = read_nifti(a.gt);
  const BinaryMask gt = mask_from_volume(gt_vol);
  const BinaryMask pred = read_mask(a.pred);
  if (pred.dims() != gt.dims()) {
    throw ShapeError("prediction " + a.pred + " and ground truth " + a.gt + " have different dims");
  }
  const bool mm = a.mm || c.config.report.ahd_in_mm;
  const auto n_params = a.n_params ? a.n_params : c.config.report.n_params;
  const MetricsReport report =
      evaluate(pred, gt, mm ? std::optional<Spacing>(gt_vol.spacing()) : std::nullopt, n_params);
  const std::string text = to_json(report);
  if (a.out.empty()) {
    out << text << "\n";
  } else {
    const fs::path p = in_output_dir(a.out, c.config);
    write_text(p, text);
    out << "wrote report " << p.string() << "\n";
  }
  return kOk;
}

// ---- phantom -------------------------------------------------------------

struct PhantomArgs {
  std::string spec;
  bool random = false;
  std::vector<std::size_t> dims{64, 64, 64};
  std::size_t tubes = 4;
  double noise = 0.0;
  std::string volume_out;
  std::string mask_out;
  std::string spec_out;
};

int cmd_phantom(const PhantomArgs& a, const Common& c, std::ostream& out) {
  PhantomSpec spec;
  if (a.random == !a.spec.empty()) {
    throw ParameterError("give either a spec file or --random");
  }
  if (a.random) {
    if (a.dims.size() != 3) throw ParameterError("--dims needs three values");
    RandomTubeOptions opts;
    opts.n_tubes = a.tubes;
    opts.noise_sigma = a.noise;
    spec = random_tube_spec({a.dims[0], a.dims[1], a.dims[2]}, opts, c.seed.value_or(0));
  } else {
    spec = phantom_spec_from_json(read_text(a.spec));
    if (c.seed) spec.seed = derive_seed(*c.seed, SeedStage::kPhantom, {0});
  }
  const Phantom ph = make_phantom(spec);
  const fs::path vout = in_output_dir(a.volume_out, c.config);
  const fs::path mout = in_output_dir(a.mask_out, c.config);
  write_nifti(ph.volume, vout);
  write_mask(ph.mask, mout, spec.spacing);
  if (!a.spec_out.empty()) write_text(in_output_dir(a.spec_out, c.config), phantom_spec_to_json(spec));
  out << "wrote phantom " << vout.string() << " and mask " << mout.string() << " ("
      << ph.mask.count() << " foreground voxels, "
      << std::setprecision(3) << 100.0 * static_cast<double>(ph.mask.count()) /
             static_cast<double>(ph.mask.size())
      << "%)\n";
  return kOk;
}

// ---- error reporting -----------------------------------------------------

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int report(std::ostream& err, const char* kind, const std::exception& e, int code) {
  err << "error:" << kind << ": " << one_line(e.what()) << "\n";
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vessel segmentation toolkit: Frangi filtering, HessNet training and inference, "
               "metrics and cohort clustering.",
               "hessvessel"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string config_path;
  Common common;
  auto* seed_opt = app.add_option("--seed", seed, "Base seed for every random stage");
  app.add_option("--jobs", common.jobs, "Volumes processed concurrently")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "Pipeline configuration JSON")->check(CLI::ExistingFile);

  ClusterArgs ca;
  auto* cluster = app.add_subcommand("cluster", "Histogram distances and Ward clustering of volumes");
  cluster->add_option("inputs", ca.inputs, "NIfTI volumes (default: paths.input_dir)");
  cluster->add_option("--bins", ca.bins, "Histogram bins over (0, max]");
  cluster->add_option("-k,--clusters", ca.k, "Number of clusters");
  cluster->add_option("-o,--out", ca.out, "Output directory for distances.json and clusters.json");

  FrangiArgs fa;
  auto* frangi = app.add_subcommand("frangi", "Multi-scale Frangi vesselness and thresholding");
  frangi->add_option("input", fa.input, "Input NIfTI volume")->required();
  frangi->add_option("--mask", fa.mask, "Brain mask applied to the vesselness map");
  frangi->add_option("--alpha", fa.alpha);
  frangi->add_option("--beta", fa.beta);
  frangi->add_option("--gamma", fa.gamma, "Default: half the maximum Hessian norm per scale");
  frangi->add_option("--scales", fa.scales, "Comma-separated sigmas in voxels")->delimiter(',');
  frangi->add_option("--threshold", fa.threshold, "otsu, none, or a fixed value");
  frangi->add_option("--bins", fa.bins, "Otsu histogram bins");
  frangi->add_option("-o,--out", fa.out, "Vesselness NIfTI")->required();
  frangi->add_option("--mask-out", fa.mask_out, "Binary mask NIfTI");

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "Train HessNet on labelled volumes");
  trainc->add_option("manifest", ta.manifest, "JSON manifest of volume/label pairs")->required();
  trainc->add_option("--checkpoint-out", ta.checkpoint_out, "Checkpoint file (default: paths.checkpoint)");
  trainc->add_option("--history-out", ta.history_out, "History JSONL (default: history.jsonl next to the checkpoint)");
  trainc->add_option("--epochs", ta.epochs);
  trainc->add_option("--patch-size", ta.patch_size);
  trainc->add_option("--patches-per-volume", ta.patches_per_volume);
  trainc->add_flag("--no-augment", ta.no_augment, "Train on the original images only");

  SegmentArgs sa;
  auto* segment = app.add_subcommand("segment", "Apply a trained HessNet to a volume");
  segment->add_option("input", sa.input, "Input NIfTI volume")->required();
  segment->add_option("--checkpoint", sa.checkpoint, "Checkpoint file (default: paths.checkpoint)");
  segment->add_option("--mask", sa.mask, "Brain mask applied to the binary output");
  segment->add_option("--threshold", sa.threshold, "Probability threshold (default 0.5)");
  segment->add_option("--prob-out", sa.prob_out, "Probability NIfTI")->required();
  segment->add_option("--mask-out", sa.mask_out, "Binary mask NIfTI")->required();

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Compare a predicted mask with ground truth");
  evalc->add_option("pred", ea.pred, "Predicted mask NIfTI")->required();
  evalc->add_option("gt", ea.gt, "Ground-truth mask NIfTI")->required();
  evalc->add_option("--params-count", ea.n_params, "Model parameter count, enables DSCLog");
  evalc->add_flag("--mm", ea.mm, "AHD in millimetres instead of voxels");
  evalc->add_option("-o,--out", ea.out, "Report JSON (default: stdout)");

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic tube phantom");
  phantom->add_option("spec", pa.spec, "Phantom spec JSON");
  phantom->add_flag("--random", pa.random, "Draw random tubes from --seed instead of a spec");
  phantom->add_option("--dims", pa.dims, "Grid size for --random")->delimiter(',')->expected(3);
  phantom->add_option("--tubes", pa.tubes, "Tube count for --random");
  phantom->add_option("--noise", pa.noise, "Noise sigma for --random");
  phantom->add_option("--volume-out", pa.volume_out, "Volume NIfTI")->required();
  phantom->add_option("--mask-out", pa.mask_out, "Mask NIfTI")->required();
  phantom->add_option("--spec-out", pa.spec_out, "Write the effective spec JSON");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report(err, "usage", e, kUserError);
  }

  try {
    if (seed_opt->count() > 0) common.seed = seed;
    if (!config_path.empty()) common.config = load_pipeline_config(config_path);
    if (cluster->parsed()) return cmd_cluster(ca, common, out);
    if (frangi->parsed()) return cmd_frangi(fa, common, out);
    if (trainc->parsed()) return cmd_train(ta, common, out);
    if (segment->parsed()) return cmd_segment(sa, common, out);
    if (evalc->parsed()) return cmd_eval(ea, common, out);
    if (phantom->parsed()) return cmd_phantom(pa, common, out);
    return kInternal;
  } catch (const TruncatedFileError& e) {
    return report(err, "truncated", e, kFormatError);
  } catch (const IoError& e) {
    return report(err, "io", e, kUserError);
  } catch (const VersionError& e) {
    return report(err, "version", e, kFormatError);
  } catch (const DimensionalityError& e) {
    return report(err, "dimensionality", e, kFormatError);
  } catch (const FormatError& e) {
    return report(err, "format", e, kFormatError);
  } catch (const ShapeError& e) {
    return report(err, "shape", e, kUserError);
  } catch (const SpecError& e) {
    return report(err, "spec", e, kUserError);
  } catch (const ParameterError& e) {
    return report(err, "parameter", e, kUserError);
  } catch (const DegenerateInputError& e) {
    return report(err, "degenerate", e, kUserError);
  } catch (const UndefinedMetricError& e) {
    return report(err, "undefined-metric", e, kUserError);
  } catch (const NumericError& e) {
    return report(err, "numeric", e, kNumericError);
  } catch (const fs::filesystem_error& e) {
    return report(err, "io", e, kUserError);
  } catch (const std::exception& e) {
    return report(err, "internal", e, kInternal);
  }
}

}  // namespace hessvessel::cli
