// locmap: command-line front end for map enhancement and localization metrics.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "locmap/locmap.hpp"

namespace {

using namespace locmap;
using nlohmann::json;
using report::format_number;

const CLI::Validator open_unit_interval{[](const std::string& s) -> std::string {
                                           double v = 0.0;
                                           try {
                                               v = std::stod(s);
                                           } catch (...) {
                                               return "not a number: " + s;
                                           }
                                           return v > 0.0 && v < 1.0 ? "" : "must lie strictly between 0 and 1";
                                       },
                                       "(0,1)"};

MapSource parse_source(const std::string& s) { return s == "cam" ? MapSource::Cam : MapSource::Sem; }

json box_accuracy_json(const BoxAccuracy& acc) {
    json j{{"box_threshold", acc.box_threshold}, {"gtknown_acc", acc.gtknown}};
    if (acc.top1) j["top1_acc"] = *acc.top1;
    return j;
}

void print_summary(const json& summary) {
    for (const auto& [key, value] : summary.items())
        std::cout << key << ' ' << (value.is_number_float() ? format_number(value.get<double>()) : value.dump())
                  << '\n';
}

fs::path require_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
    return fs::path(dir);
}

// ---- subcommands ----

struct FixturesArgs {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t n = 10;
};

void run_fixtures(const FixturesArgs& a) {
    std::cout << gen_fixtures(a.seed, a.out_dir, a.n).string() << '\n';
}

struct EnhanceArgs {
    std::string manifest, out_dir;
    std::size_t k = default_seed_count;
};

/// Writes <id>_sem.npy per image and a manifest whose first-stage maps are
/// the enhanced maps.
void run_enhance(const EnhanceArgs& a, unsigned jobs) {
    auto m = load_manifest(a.manifest);
    const auto dir = require_dir(a.out_dir);
    const MapConfig cfg{MapSource::Sem, a.k, {}};
    parallel_for(m.images.size(), jobs, [&](std::size_t i) {
        auto& rec = m.images[i];
        const auto sem = source_map(rec, cfg);
        const auto path = fs::absolute(dir / (rec.id + "_sem.npy"));
        npy::write_array(path, npy::from_grid(sem.grid()));
        rec.cam = path;
    });
    write_manifest(dir / "manifest.json", m);
    std::cout << (dir / "manifest.json").string() << '\n';
}

struct EvalMapsArgs {
    std::string manifest, source = "sem", out;
    std::size_t k = default_seed_count;
    bool micro = false;
};

void run_eval_maps(const EvalMapsArgs& a, unsigned jobs) {
    const auto m = load_manifest(a.manifest);
    const MapConfig cfg{parse_source(a.source), a.k, {}};
    const auto curve = evaluate_maps(m, cfg, a.micro ? IouAveraging::Micro : IouAveraging::Macro, jobs);
    json config{{"subcommand", "eval-maps"},
                {"manifest", a.manifest},
                {"source", a.source},
                {"averaging", a.micro ? "micro" : "macro"}};
    if (cfg.source == MapSource::Sem) config["k"] = a.k;
    const auto doc = report::curve_json(curve, config);
    report::write_json(a.out, doc);
    report::write_companions(a.out, doc, a.source);
    print_summary(doc.at("summary"));
}

struct EvalBoxesArgs {
    std::string manifest, source = "sem", out;
    std::size_t k = default_seed_count;
    double box_threshold = default_box_threshold;
    bool sweep = false;
    int connectivity = 8;
};

void run_eval_boxes(const EvalBoxesArgs& a, unsigned jobs) {
    const auto m = load_manifest(a.manifest);
    const MapConfig cfg{parse_source(a.source), a.k, {}};
    const auto conn = a.connectivity == 4 ? Connectivity::Four : Connectivity::Eight;
    const auto maps = image_maps(m, cfg, jobs);

    std::vector<ImageCurve> curves(m.images.size());
    parallel_for(m.images.size(), jobs, [&](std::size_t i) {
        curves[i] = iou_threshold_curve(quantize_map(maps[i]), load_gt_mask(m.images[i]));
    });
    const auto acc = box_accuracy(box_samples(m, maps, a.box_threshold, conn, jobs), a.box_threshold);

    json config{{"subcommand", "eval-boxes"},
                {"manifest", a.manifest},
                {"source", a.source},
                {"box_threshold", a.box_threshold},
                {"connectivity", a.connectivity}};
    if (cfg.source == MapSource::Sem) config["k"] = a.k;
    auto doc = report::curve_json(dataset_curve(curves), config);
    doc["summary"]["gtknown_acc"] = acc.gtknown;
    if (acc.top1) doc["summary"]["top1_acc"] = *acc.top1;
    if (a.sweep) {
        json rows = json::array();
        for (double t : default_box_sweep()) rows.push_back(box_accuracy_json(box_accuracy(box_samples(m, maps, t, conn, jobs), t)));
        doc["box_sweep"] = std::move(rows);
    }
    if (!a.out.empty()) {
        report::write_json(a.out, doc);
        report::write_companions(a.out, doc, a.source);
    }
    print_summary(doc.at("summary"));
    if (a.sweep)
        for (const auto& row : doc.at("box_sweep"))
            std::cout << "sweep " << format_number(row.at("box_threshold").get<double>()) << ' '
                      << format_number(row.at("gtknown_acc").get<double>()) << '\n';
}

struct GenEdgesArgs {
    std::string manifest, out_dir;
    std::size_t k = default_seed_count;
};

void run_gen_edges(const GenEdgesArgs& a, unsigned jobs) {
    auto m = load_manifest(a.manifest);
    const auto dir = require_dir(a.out_dir);
    const MapConfig cfg{MapSource::Sem, a.k, {}};
    parallel_for(m.images.size(), jobs, [&](std::size_t i) {
        auto& rec = m.images[i];
        if (!rec.rgb) throw InvalidInput("image '" + rec.id + "' has no rgb render");
        const auto rgb = png::read_rgb_png(*rec.rgb);
        if (rgb.rows != rec.height || rgb.cols != rec.width)
            throw DimensionError(rgb.rows, rgb.cols, rec.height, rec.width);
        BinaryMask edges;
        try {
            edges = make_pseudo_boundary(image_map(rec, cfg), rgb);
        } catch (const EmptyObject&) {
            throw InvalidInput("image '" + rec.id + "': refined map has no foreground");
        }
        const auto path = fs::absolute(dir / (rec.id + "_edges.png"));
        png::write_mask_png(path, edges);
        rec.edges = path;
    });
    write_manifest(dir / "manifest.json", m);
    std::cout << (dir / "manifest.json").string() << '\n';
}

struct FitEdgesArgs {
    std::string manifest, mode = "hns", out, report_path;
    double lambda = 1.0, lr = 1.0;
    std::size_t steps = 500, k = default_seed_count;
};

void run_fit_edges(const FitEdgesArgs& a, unsigned jobs) {
    const auto m = load_manifest(a.manifest);
    if (m.images.empty()) throw EmptyDataset();
    const MapConfig cfg{MapSource::Sem, a.k, {}};
    std::vector<FeatureStack> stacks(m.images.size());
    std::vector<BinaryMask> targets(m.images.size());
    parallel_for(m.images.size(), jobs, [&](std::size_t i) {
        const auto& rec = m.images[i];
        if (!rec.rgb || !rec.edges)
            throw InvalidInput("image '" + rec.id + "' needs rgb and edges (run gen-edges first)");
        stacks[i] = pixel_edge_features(png::read_rgb_png(*rec.rgb), image_map(rec, cfg));
        targets[i] = png::read_mask_png(*rec.edges);
    });
    const auto [features, edges] = concat_pixels(stacks, targets);

    ToyFitOptions opts;
    opts.steps = a.steps;
    opts.learning_rate = a.lr;
    opts.lambda = a.lambda;
    opts.mode = a.mode == "hns" ? LossMode::Hns : LossMode::Vanilla;
    const auto fit = toy_fit(features, edges, opts);

    std::vector<double> params = fit.predictor.weights;
    params.push_back(fit.predictor.bias);
    if (const auto parent = fs::path(a.out).parent_path(); !parent.empty()) require_dir(parent.string());
    npy::write_array(a.out, npy::from_floats({1, params.size()}, params));

    const json metrics{{"config",
                        {{"subcommand", "fit-edges"},
                         {"manifest", a.manifest},
                         {"mode", a.mode},
                         {"lambda", a.lambda},
                         {"steps", a.steps},
                         {"lr", a.lr},
                         {"k", a.k}}},
                       {"summary",
                        {{"initial_loss", fit.initial_loss},
                         {"final_loss", fit.final_loss},
                         {"precision", fit.precision},
                         {"recall", fit.recall},
                         {"mean_negative_score", fit.mean_hard_negative}}}};
    if (!a.report_path.empty()) report::write_json(a.report_path, metrics);
    print_summary(metrics.at("summary"));
}

struct EvalEdgesArgs {
    std::string pred_dir, gt_dir, out;
    double tol = default_match_tolerance;
    bool gt_from_masks = false;
};

/// Pairing key of a file: its stem without a trailing role suffix.
std::string pair_key(const fs::path& p) {
    auto stem = p.stem().string();
    for (const char* suffix : {"_edges", "_pred", "_mask", "_gt", "_boundary"}) {
        const std::string s(suffix);
        if (stem.size() > s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0)
            return stem.substr(0, stem.size() - s.size());
    }
    return stem;
}

std::map<std::string, fs::path> index_dir(const std::string& dir, const std::vector<std::string>& exts) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: '" + dir + "'");
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
        const auto key = pair_key(entry.path());
        if (!out.emplace(key, entry.path()).second)
            throw InvalidInput("two files in '" + dir + "' pair as '" + key + "'");
    }
    return out;
}

RealGrid read_edge_prediction(const fs::path& p) {
    if (p.extension() == ".npy") {
        auto g = npy::to_grid(npy::read_array(p));
        for (double v : g.values())
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("prediction '" + p.string() + "' has values outside [0, 1]");
        return g;
    }
    const auto gray = png::read_gray_png(p);
    RealGrid out(gray.rows(), gray.cols());
    for (std::size_t i = 0; i < gray.size(); ++i) out[i] = static_cast<double>(gray[i]) / 255.0;
    return out;
}

void run_eval_edges(const EvalEdgesArgs& a, unsigned jobs) {
    const auto preds = index_dir(a.pred_dir, {".png", ".npy"});
    const auto gts = index_dir(a.gt_dir, {".png"});
    if (preds.empty()) throw EmptyDataset();
    std::vector<std::pair<fs::path, fs::path>> pairs;
    for (const auto& [key, path] : preds) {
        const auto it = gts.find(key);
        if (it == gts.end()) throw InvalidInput("no ground truth for prediction '" + path.string() + "'");
        pairs.emplace_back(path, it->second);
    }
    std::vector<EdgeSample> samples(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        auto gt = png::read_mask_png(pairs[i].second);
        if (a.gt_from_masks) gt = mask_boundary(gt);
        samples[i] = EdgeSample{read_edge_prediction(pairs[i].first), std::move(gt)};
    });
    const auto res = edge_benchmark(samples, a.tol, edge_thresholds(), jobs);
    const json config{{"subcommand", "eval-edges"},
                      {"pred_dir", a.pred_dir},
                      {"gt_dir", a.gt_dir},
                      {"tol", a.tol},
                      {"gt_from_masks", a.gt_from_masks},
                      {"images", pairs.size()}};
    const auto doc = report::edge_json(res, config);
    report::write_json(a.out, doc);
    report::write_companions(a.out, doc, "edges");
    print_summary(doc.at("summary"));
}

struct SweepKArgs {
    std::string manifest, out;
    std::vector<std::size_t> ks{1, 20, 40, 60, 80, 100};
    double box_threshold = default_box_threshold;
};

void run_sweep_k(const SweepKArgs& a, unsigned jobs) {
    const auto m = load_manifest(a.manifest);
    const auto rows = k_sweep(m, a.ks, a.box_threshold, jobs);
    std::string csv = "k,gtknown_acc,peak_iou\n";
    for (const auto& r : rows)
        csv += std::to_string(r.k) + ',' + format_number(r.gtknown_acc) + ',' + format_number(r.peak_iou) + '\n';
    if (!a.out.empty()) report::write_text(a.out, csv);
    std::cout << csv;
}

struct ReportArgs {
    std::string in, out;
};

void run_report(const ReportArgs& a) {
    const auto doc = report::read_json(a.in);
    if (!doc.is_object() || !doc.contains("curve") || !doc.contains("summary"))
        throw InvalidInput("'" + a.in + "' is not a report");
    std::string name = "map";
    if (doc.contains("config") && doc["config"].contains("source")) name = doc["config"]["source"].get<std::string>();
    else if (!doc["curve"].contains("mean_iou")) name = "edges";
    auto base = fs::path(a.out);
    base.replace_extension(".json");
    report::write_companions(base, doc, name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localization map enhancement and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned jobs = jobs_from_env();
    app.add_option("--jobs", jobs, "Worker threads (default: LOCMAP_JOBS or 1)")->check(CLI::PositiveNumber);

    const std::vector<std::string> sources{"cam", "sem"};

    FixturesArgs fx;
    auto* fixtures = app.add_subcommand("fixtures", "Generate a synthetic dataset");
    fixtures->add_option("--seed", fx.seed, "RNG seed");
    fixtures->add_option("--out-dir", fx.out_dir)->required();
    fixtures->add_option("--n", fx.n, "Number of images")->check(CLI::PositiveNumber);

    EnhanceArgs en;
    auto* enhance = app.add_subcommand("enhance", "Write enhanced maps and a derived manifest");
    enhance->add_option("--manifest", en.manifest)->required();
    enhance->add_option("--k", en.k, "Seed count")->check(CLI::PositiveNumber);
    enhance->add_option("--out-dir", en.out_dir)->required();

    EvalMapsArgs em;
    auto* eval_maps = app.add_subcommand("eval-maps", "IoU-Threshold evaluation against masks");
    eval_maps->add_option("--manifest", em.manifest)->required();
    eval_maps->add_option("--source", em.source)->check(CLI::IsMember(sources));
    eval_maps->add_option("--k", em.k)->check(CLI::PositiveNumber);
    eval_maps->add_option("--out", em.out, "Report JSON path")->required();
    eval_maps->add_flag("--micro", em.micro, "IoU of summed counts instead of the per-image mean");

    EvalBoxesArgs eb;
    auto* eval_boxes = app.add_subcommand("eval-boxes", "Box localization accuracy");
    eval_boxes->add_option("--manifest", eb.manifest)->required();
    eval_boxes->add_option("--source", eb.source)->check(CLI::IsMember(sources));
    eval_boxes->add_option("--k", eb.k)->check(CLI::PositiveNumber);
    eval_boxes->add_option("--box-threshold", eb.box_threshold)->check(open_unit_interval);
    eval_boxes->add_flag("--sweep", eb.sweep, "Also report box thresholds 0.05..0.95");
    eval_boxes->add_option("--connectivity", eb.connectivity)->check(CLI::IsMember({4, 8}));
    eval_boxes->add_option("--out", eb.out, "Report JSON path");

    GenEdgesArgs ge;
    auto* gen_edges = app.add_subcommand("gen-edges", "Pseudo-boundary masks from enhanced maps");
    gen_edges->add_option("--manifest", ge.manifest)->required();
    gen_edges->add_option("--k", ge.k)->check(CLI::PositiveNumber);
    gen_edges->add_option("--out-dir", ge.out_dir)->required();

    FitEdgesArgs fe;
    auto* fit_edges = app.add_subcommand("fit-edges", "Fit a per-pixel edge predictor to pseudo-boundaries");
    fit_edges->add_option("--manifest", fe.manifest, "Manifest written by gen-edges")->required();
    fit_edges->add_option("--mode", fe.mode)->check(CLI::IsMember({"vanilla", "hns"}));
    fit_edges->add_option("--lambda", fe.lambda)->check(CLI::NonNegativeNumber);
    fit_edges->add_option("--steps", fe.steps)->check(CLI::PositiveNumber);
    fit_edges->add_option("--lr", fe.lr)->check(CLI::PositiveNumber);
    fit_edges->add_option("--k", fe.k)->check(CLI::PositiveNumber);
    fit_edges->add_option("--out", fe.out, "Predictor array path")->required();
    fit_edges->add_option("--report", fe.report_path, "Metrics JSON path");

    EvalEdgesArgs ee;
    auto* eval_edges = app.add_subcommand("eval-edges", "ODS/OIS/AP edge benchmark");
    eval_edges->add_option("--pred-dir", ee.pred_dir)->required();
    eval_edges->add_option("--gt-dir", ee.gt_dir)->required();
    eval_edges->add_option("--tol", ee.tol, "Match radius as a fraction of the image diagonal")
        ->check(CLI::PositiveNumber);
    eval_edges->add_option("--out", ee.out, "Report JSON path")->required();
    eval_edges->add_flag("--gt-from-masks", ee.gt_from_masks, "Ground-truth files are object masks");

    SweepKArgs sk;
    auto* sweep_k = app.add_subcommand("sweep-k", "Seed-count sweep");
    sweep_k->add_option("--manifest", sk.manifest)->required();
    sweep_k->add_option("--k-list", sk.ks)->delimiter(',')->check(CLI::PositiveNumber);
    sweep_k->add_option("--box-threshold", sk.box_threshold)->check(open_unit_interval);
    sweep_k->add_option("--out", sk.out, "CSV path");

    ReportArgs rp;
    auto* rep = app.add_subcommand("report", "Re-render CSV and SVG from a report JSON");
    rep->add_option("--in", rp.in)->required();
    rep->add_option("--out", rp.out, "Output base path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (fixtures->parsed()) run_fixtures(fx);
        else if (enhance->parsed()) run_enhance(en, jobs);
        else if (eval_maps->parsed()) run_eval_maps(em, jobs);
        else if (eval_boxes->parsed()) run_eval_boxes(eb, jobs);
        else if (gen_edges->parsed()) run_gen_edges(ge, jobs);
        else if (fit_edges->parsed()) run_fit_edges(fe, jobs);
        else if (eval_edges->parsed()) run_eval_edges(ee, jobs);
        else if (sweep_k->parsed()) run_sweep_k(sk, jobs);
        else if (rep->parsed()) run_report(rp);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
