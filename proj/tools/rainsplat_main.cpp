// rainsplat: precipitation field reconstruction by 2D Gaussian splatting.
//
// Subcommands: synth, sample, interp, render, eval, psd, pipeline.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rainsplat/rainsplat.hpp"

namespace rs = rainsplat;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// helpers

rs::GridFormat detect_format(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw rs::io_error("cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    is.read(magic, 4);
    return std::memcmp(magic, "SPF1", 4) == 0 ? rs::GridFormat::binary : rs::GridFormat::ascii;
}

rs::GridField read_grid_auto(const std::string& path, bool require_nonneg = true) {
    return rs::read_grid(path, detect_format(path), require_nonneg);
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_double_list(s)) out.push_back(static_cast<int>(v));
    return out;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// One manifest per run: resolved parameters and paths, stable key order.
struct Manifest {
    std::map<std::string, std::string> kv;

    void set(const std::string& k, const std::string& v) { kv[k] = v; }
    void set(const std::string& k, double v) { kv[k] = fmt(v); }
    void set(const std::string& k, std::size_t v) { kv[k] = std::to_string(v); }
    void set(const std::string& k, bool v) { kv[k] = v ? "true" : "false"; }

    void write(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw rs::io_error("manifest: cannot open for writing: " + path);
        for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    }
};

// set from --deterministic; suppresses run-varying manifest fields
bool g_deterministic = false;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void set_wall_time(Manifest& m, const Timer& timer) {
    if (!g_deterministic) m.set("wall_time_s", timer.seconds());
}

// Simple field image: linear blue->green->red over [0, max], white = missing.
void write_field_ppm(const rs::GridField& field, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw rs::io_error("plot: cannot open for writing: " + path);
    const double vmax = std::max(field.max_value(), 1e-12);
    os << "P6\n" << field.cols() << " " << field.rows() << "\n255\n";
    for (std::size_t r = 0; r < field.rows(); ++r) {
        // image row 0 at the top = highest y
        const std::size_t rr = field.rows() - 1 - r;
        for (std::size_t c = 0; c < field.cols(); ++c) {
            const double v = field.at(rr, c);
            unsigned char px[3];
            if (rs::is_missing(v)) {
                px[0] = px[1] = px[2] = 255;
            } else {
                const double t = std::clamp(v / vmax, 0.0, 1.0);
                px[0] = static_cast<unsigned char>(255.0 * t);
                px[1] = static_cast<unsigned char>(255.0 * (1.0 - std::abs(2.0 * t - 1.0)));
                px[2] = static_cast<unsigned char>(255.0 * (1.0 - t));
            }
            os.write(reinterpret_cast<char*>(px), 3);
        }
    }
}

// Crude log-power bar chart for a spectrum.
void write_psd_ppm(const rs::PsdResult& psd, const std::string& path) {
    const int W = static_cast<int>(psd.bins.size()) * 4;
    const int H = 200;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& b : psd.bins) {
        if (b.count == 0 || b.power <= 0.0) continue;
        const double lp = std::log10(b.power);
        if (first) { lo = hi = lp; first = false; }
        lo = std::min(lo, lp);
        hi = std::max(hi, lp);
    }
    if (first) { lo = 0.0; hi = 1.0; }
    if (hi <= lo) hi = lo + 1.0;
    std::vector<unsigned char> img(static_cast<std::size_t>(W) * H * 3, 255);
    for (std::size_t i = 0; i < psd.bins.size(); ++i) {
        const auto& b = psd.bins[i];
        if (b.count == 0 || b.power <= 0.0) continue;
        const int h = static_cast<int>((std::log10(b.power) - lo) / (hi - lo) * (H - 1));
        for (int x = static_cast<int>(i) * 4; x < static_cast<int>(i + 1) * 4 && x < W; ++x)
            for (int y = 0; y <= h; ++y) {
                const std::size_t p = (static_cast<std::size_t>(H - 1 - y) * W + x) * 3;
                img[p] = 40; img[p + 1] = 80; img[p + 2] = 200;
            }
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw rs::io_error("plot: cannot open for writing: " + path);
    os << "P6\n" << W << " " << H << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

void write_report_text(const rs::EvalReport& rep, std::ostream& os) {
    os << "n_cells " << rep.n_cells << "\n";
    os << "rmse " << fmt(rep.rmse) << "\n";
    os << "pearson " << opt_str(rep.pearson) << "\n";
    os << "spearman " << opt_str(rep.spearman) << "\n";
    for (const auto& [t, v] : rep.csi) os << "csi@" << fmt(t) << " " << opt_str(v) << "\n";
    for (const auto& [t, v] : rep.pod) os << "pod@" << fmt(t) << " " << opt_str(v) << "\n";
    for (const auto& [t, v] : rep.far) os << "far@" << fmt(t) << " " << opt_str(v) << "\n";
    for (const auto& [t, v] : rep.freq_bias) os << "bias@" << fmt(t) << " " << opt_str(v) << "\n";
    for (const auto& [k, v] : rep.fss)
        os << "fss@" << fmt(k.first) << "w" << k.second << " " << fmt(v) << "\n";
}

json report_to_json(const rs::EvalReport& rep) {
    json j;
    j["n_cells"] = rep.n_cells;
    j["rmse"] = rep.rmse;
    j["pearson"] = rep.pearson ? json(*rep.pearson) : json(nullptr);
    j["spearman"] = rep.spearman ? json(*rep.spearman) : json(nullptr);
    auto put = [](json& dst, const std::map<double, std::optional<double>>& m) {
        for (const auto& [t, v] : m) dst[fmt(t)] = v ? json(*v) : json(nullptr);
    };
    put(j["csi"], rep.csi);
    put(j["pod"], rep.pod);
    put(j["far"], rep.far);
    put(j["freq_bias"], rep.freq_bias);
    for (const auto& [k, v] : rep.fss)
        j["fss"][fmt(k.first)][std::to_string(k.second)] = v;
    return j;
}

// ---------------------------------------------------------------------------
// per-command option bags

struct CommonOpts {
    unsigned threads = 1;
    bool deterministic = false;
};

struct SynthOpts {
    std::uint64_t seed = 0;
    std::size_t blobs = 10;
    std::size_t rows = 64, cols = 64;
    double cell_size = 1.0, origin_x = 0.0, origin_y = 0.0;
    double amp_lo = 1.0, amp_hi = 10.0, sigma_lo = 1.5, sigma_hi = 4.0;
    double rho_lo = -0.5, rho_hi = 0.5, background = 0.0;
    std::size_t n_stations = 0;
    double noise_sd = 0.0, missing_frac = 0.0;
    std::string out_field, out_scene, out_stations;
    bool ascii = false;
};

struct SampleOpts {
    std::string field, out, out_prob;
    rs::SamplingConfig cfg;
};

struct InterpOpts {
    std::string method = "barnes";
    std::string stations, like, out;
    bool ascii = false;
    rs::BarnesConfig barnes;
    rs::MQConfig mq;
    std::string variogram = "exponential";
    double nugget = -1.0, sill = -1.0, range = -1.0; // <0: fit from data
    int vbins = 12;
};

struct RenderOpts {
    std::string scene, like, out;
    double out_res = 1.0;
    double cutoff_k = 5.0;
    bool no_cull = false;
    bool ascii = false;
};

struct EvalOpts {
    std::string pred, obs, out;
    std::string thresholds = "0.1,1,5,10";
    std::string fss_windows = "1,5";
    bool json_out = false;
    bool plot = false;
};

struct PsdOpts {
    std::string field, out;
    int bins = 32;
    bool plot = false;
};

struct PipelineOpts {
    std::string surrogate, stations, target;
    std::string out_field, out_scene, out_loss;
    double out_res = 1.0;
    bool ascii = false;
    rs::SamplingConfig scfg;
    rs::FitConfig fcfg;
    double cutoff_k = 5.0;
    std::string lr_schedule = "cosine";
};

// ---------------------------------------------------------------------------
// command bodies

int cmd_synth(const SynthOpts& o) {
    Timer timer;
    rs::SynthConfig cfg;
    cfg.seed = o.seed;
    cfg.n_blobs = o.blobs;
    cfg.spec = {o.origin_x, o.origin_y, o.cell_size, o.rows, o.cols};
    cfg.amp_lo = o.amp_lo; cfg.amp_hi = o.amp_hi;
    cfg.sigma_lo = o.sigma_lo; cfg.sigma_hi = o.sigma_hi;
    cfg.rho_lo = o.rho_lo; cfg.rho_hi = o.rho_hi;
    cfg.background = o.background;
    auto scene = rs::synth_scene(cfg);

    const auto format = o.ascii ? rs::GridFormat::ascii : rs::GridFormat::binary;
    if (!o.out_field.empty()) rs::write_grid(scene.field, o.out_field, format);
    if (!o.out_scene.empty()) rs::write_gaussians(scene.set, o.out_scene);
    if (o.n_stations > 0 && !o.out_stations.empty()) {
        auto st = rs::synth_stations(scene.field, o.n_stations, o.noise_sd, o.missing_frac,
                                     o.seed + 1);
        rs::write_stations(st, o.out_stations);
    }

    Manifest m;
    m.set("command", std::string("synth"));
    m.set("version", std::string(kVersion));
    m.set("seed", static_cast<std::size_t>(o.seed));
    m.set("n_blobs", o.blobs);
    m.set("rows", o.rows);
    m.set("cols", o.cols);
    m.set("cell_size", o.cell_size);
    m.set("amp_lo", o.amp_lo); m.set("amp_hi", o.amp_hi);
    m.set("sigma_lo", o.sigma_lo); m.set("sigma_hi", o.sigma_hi);
    m.set("rho_lo", o.rho_lo); m.set("rho_hi", o.rho_hi);
    m.set("background", o.background);
    m.set("n_stations", o.n_stations);
    m.set("noise_sd", o.noise_sd);
    m.set("missing_frac", o.missing_frac);
    m.set("out_field", o.out_field);
    m.set("out_scene", o.out_scene);
    m.set("out_stations", o.out_stations);
    set_wall_time(m, timer);
    if (!o.out_field.empty()) m.write(o.out_field + ".manifest");
    return 0;
}

int cmd_sample(const SampleOpts& o) {
    Timer timer;
    auto field = read_grid_auto(o.field);
    auto prob = rs::sampling_distribution(field, o.cfg);
    auto result = rs::draw_points(prob, field, o.cfg);
    if (result.truncated)
        std::cerr << "warning: only " << result.points.size() << " of " << o.cfg.k_points
                  << " points available after suppression\n";
    rs::write_sample_points(result.points, o.out);
    if (!o.out_prob.empty()) {
        rs::GridField pgrid(field.spec);
        pgrid.values = prob;
        rs::write_grid(pgrid, o.out_prob, rs::GridFormat::binary);
    }

    Manifest m;
    m.set("command", std::string("sample"));
    m.set("version", std::string(kVersion));
    m.set("field", o.field);
    m.set("tau", o.cfg.tau);
    m.set("w_grad", o.cfg.w_grad);
    m.set("w_uniform", o.cfg.w_uniform);
    m.set("w_heavy", o.cfg.w_heavy);
    m.set("temperature", o.cfg.temperature);
    m.set("epsilon", o.cfg.epsilon);
    m.set("k_points", o.cfg.k_points);
    m.set("nms_radius", o.cfg.nms_radius);
    m.set("mask_heavy", o.cfg.mask_heavy);
    m.set("seed", static_cast<std::size_t>(o.cfg.seed));
    m.set("points_drawn", result.points.size());
    m.set("truncated", result.truncated);
    m.set("out", o.out);
    set_wall_time(m, timer);
    m.write(o.out + ".manifest");
    return 0;
}

int cmd_interp(const InterpOpts& o, const CommonOpts& common) {
    Timer timer;
    auto stations = rs::read_stations(o.stations);
    const rs::GridSpec target = read_grid_auto(o.like, false).spec;

    rs::GridField out;
    Manifest m;
    if (o.method == "barnes") {
        rs::BarnesConfig cfg = o.barnes;
        cfg.threads = common.threads;
        out = rs::barnes(stations, target, cfg);
        m.set("sigma", cfg.sigma);
        m.set("passes", static_cast<std::size_t>(cfg.passes));
        m.set("gamma_refine", cfg.gamma_refine);
    } else if (o.method == "kriging") {
        rs::VariogramModel model;
        model.kind = o.variogram == "spherical" ? rs::VariogramKind::spherical
                                                : rs::VariogramKind::exponential;
        if (o.nugget >= 0.0 && o.sill > 0.0 && o.range > 0.0) {
            model.nugget = o.nugget;
            model.sill = o.sill;
            model.range = o.range;
        } else {
            model = rs::fit_variogram(stations, o.vbins, model.kind);
        }
        out = rs::kriging(stations, target, model, common.threads);
        m.set("variogram", o.variogram);
        m.set("nugget", model.nugget);
        m.set("sill", model.sill);
        m.set("range", model.range);
        m.set("variogram_degenerate", model.degenerate);
    } else if (o.method == "mq") {
        rs::MQConfig cfg = o.mq;
        cfg.threads = common.threads;
        out = rs::multiquadric(stations, target, cfg);
        m.set("mq_c", cfg.c);
        m.set("smoothing", cfg.smoothing);
    } else {
        throw CLI::ValidationError("--method must be barnes, kriging or mq");
    }
    // interpolators may slightly undershoot; these are generic rasters
    rs::write_grid(out, o.out, o.ascii ? rs::GridFormat::ascii : rs::GridFormat::binary, false);

    m.set("command", std::string("interp"));
    m.set("version", std::string(kVersion));
    m.set("method", o.method);
    m.set("stations", o.stations);
    m.set("like", o.like);
    m.set("out", o.out);
    m.set("threads", static_cast<std::size_t>(common.threads));
    set_wall_time(m, timer);
    m.write(o.out + ".manifest");
    return 0;
}

int cmd_render(const RenderOpts& o, const CommonOpts& common) {
    Timer timer;
    const rs::GridSpec base = read_grid_auto(o.like, false).spec;
    const rs::GridSpec target = o.out_res == 1.0 ? base : rs::refine(base, o.out_res);
    auto set = rs::read_gaussians(o.scene, base);
    rs::RenderConfig cfg;
    cfg.cutoff_k = o.cutoff_k;
    cfg.no_cull = o.no_cull;
    cfg.threads = common.threads;
    auto field = rs::render_selective(set, target, cfg);
    rs::write_grid(field, o.out, o.ascii ? rs::GridFormat::ascii : rs::GridFormat::binary);

    Manifest m;
    m.set("command", std::string("render"));
    m.set("version", std::string(kVersion));
    m.set("scene", o.scene);
    m.set("like", o.like);
    m.set("out", o.out);
    m.set("out_res", o.out_res);
    m.set("cutoff_k", o.cutoff_k);
    m.set("no_cull", o.no_cull);
    m.set("threads", static_cast<std::size_t>(common.threads));
    set_wall_time(m, timer);
    m.write(o.out + ".manifest");
    return 0;
}

int cmd_eval(const EvalOpts& o) {
    Timer timer;
    auto pred = read_grid_auto(o.pred, false);
    auto obs = read_grid_auto(o.obs, false);
    auto rep = rs::eval_report(pred, obs, parse_double_list(o.thresholds),
                               parse_int_list(o.fss_windows));
    if (o.out.empty()) {
        if (o.json_out) std::cout << report_to_json(rep).dump(2) << "\n";
        else write_report_text(rep, std::cout);
    } else {
        std::ofstream os(o.out);
        if (!os) throw rs::io_error("eval: cannot open for writing: " + o.out);
        if (o.json_out) os << report_to_json(rep).dump(2) << "\n";
        else write_report_text(rep, os);
    }
    if (o.plot) {
        write_field_ppm(pred, (o.out.empty() ? o.pred : o.out) + ".pred.ppm");
        write_field_ppm(obs, (o.out.empty() ? o.pred : o.out) + ".obs.ppm");
    }
    if (!o.out.empty()) {
        Manifest m;
        m.set("command", std::string("eval"));
        m.set("version", std::string(kVersion));
        m.set("pred", o.pred);
        m.set("obs", o.obs);
        m.set("thresholds", o.thresholds);
        m.set("fss_windows", o.fss_windows);
        m.set("out", o.out);
        set_wall_time(m, timer);
        m.write(o.out + ".manifest");
    }
    return 0;
}

int cmd_psd(const PsdOpts& o) {
    Timer timer;
    auto field = read_grid_auto(o.field, false);
    auto psd = rs::psd_radial(field, o.bins);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw rs::io_error("psd: cannot open for writing: " + o.out);
        os = &file;
    }
    (*os) << "wavenumber,power,count\n";
    (*os) << "0," << fmt(psd.dc_power) << ",1\n";
    for (const auto& b : psd.bins)
        (*os) << fmt(b.wavenumber) << "," << fmt(b.power) << "," << b.count << "\n";
    if (o.plot) write_psd_ppm(psd, (o.out.empty() ? o.field : o.out) + ".ppm");
    if (!o.out.empty()) {
        Manifest m;
        m.set("command", std::string("psd"));
        m.set("version", std::string(kVersion));
        m.set("field", o.field);
        m.set("bins", static_cast<std::size_t>(o.bins));
        m.set("out", o.out);
        set_wall_time(m, timer);
        m.write(o.out + ".manifest");
    }
    return 0;
}

int cmd_pipeline(const PipelineOpts& o, const CommonOpts& common) {
    Timer timer;
    auto surrogate = read_grid_auto(o.surrogate);
    rs::StationSet stations;
    if (!o.stations.empty()) stations = rs::read_stations(o.stations);
    rs::GridField target = o.target.empty() ? surrogate : read_grid_auto(o.target);

    auto prob = rs::sampling_distribution(surrogate, o.scfg);
    auto sampled = rs::draw_points(prob, surrogate, o.scfg);

    rs::FitConfig fcfg = o.fcfg;
    fcfg.lr_schedule = o.lr_schedule == "constant" ? rs::LrSchedule::constant
                                                   : rs::LrSchedule::cosine;
    auto init = rs::init_gaussians(sampled.points, stations, fcfg, surrogate.spec);

    rs::RenderConfig rcfg;
    rcfg.cutoff_k = o.cutoff_k;
    rcfg.threads = common.threads;
    auto fitres = rs::fit(init, target, fcfg, rcfg);

    const rs::GridSpec out_spec =
        o.out_res == 1.0 ? surrogate.spec : rs::refine(surrogate.spec, o.out_res);
    auto field = rs::render_selective(fitres.set, out_spec, rcfg);

    rs::write_grid(field, o.out_field, o.ascii ? rs::GridFormat::ascii : rs::GridFormat::binary);
    if (!o.out_scene.empty()) rs::write_gaussians(fitres.set, o.out_scene);
    if (!o.out_loss.empty()) rs::write_loss_history(fitres.loss_history, o.out_loss);

    Manifest m;
    m.set("command", std::string("pipeline"));
    m.set("version", std::string(kVersion));
    m.set("surrogate", o.surrogate);
    m.set("stations", o.stations);
    m.set("target", o.target.empty() ? o.surrogate : o.target);
    m.set("tau", o.scfg.tau);
    m.set("w_grad", o.scfg.w_grad);
    m.set("w_uniform", o.scfg.w_uniform);
    m.set("w_heavy", o.scfg.w_heavy);
    m.set("temperature", o.scfg.temperature);
    m.set("k_points", o.scfg.k_points);
    m.set("nms_radius", o.scfg.nms_radius);
    m.set("seed", static_cast<std::size_t>(o.scfg.seed));
    m.set("lambda_sigma", fcfg.lambda_sigma);
    m.set("lambda_alpha", fcfg.lambda_alpha);
    m.set("max_iters", fcfg.max_iters);
    m.set("learning_rate", fcfg.learning_rate);
    m.set("lr_schedule", o.lr_schedule);
    m.set("grad_clip", fcfg.grad_clip);
    m.set("init_sigma", fcfg.init_sigma);
    m.set("freeze_anchor_all", fcfg.freeze_anchor_all);
    m.set("cutoff_k", o.cutoff_k);
    m.set("out_res", o.out_res);
    m.set("out_field", o.out_field);
    m.set("out_scene", o.out_scene);
    m.set("out_loss", o.out_loss);
    m.set("n_gaussians", fitres.set.gaussians.size());
    m.set("points_drawn", sampled.points.size());
    m.set("stop_reason", std::string(fitres.stopped_reason == rs::StopReason::converged
                                         ? "converged"
                                         : fitres.stopped_reason == rs::StopReason::diverged
                                               ? "diverged"
                                               : "max_iters"));
    m.set("threads", static_cast<std::size_t>(common.threads));
    m.set("deterministic", common.deterministic);
    set_wall_time(m, timer);
    m.write(o.out_field + ".manifest");
    return 0;
}

void add_sampling_flags(CLI::App* app, rs::SamplingConfig& cfg) {
    app->add_option("--tau", cfg.tau, "rain-support threshold (mm/h)");
    app->add_option("--w-grad", cfg.w_grad, "edge term weight");
    app->add_option("--w-uniform", cfg.w_uniform, "coverage term weight");
    app->add_option("--w-heavy", cfg.w_heavy, "intensity term weight");
    app->add_option("--temperature", cfg.temperature, "softmax temperature");
    app->add_option("--epsilon", cfg.epsilon, "normalization regularizer");
    app->add_option("--k-points", cfg.k_points, "number of points to draw");
    app->add_option("--nms-radius", cfg.nms_radius, "suppression radius (grid units)");
    app->add_flag("--mask-heavy", cfg.mask_heavy, "restrict heavy term to rain support");
    app->add_option("--seed", cfg.seed, "RNG seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"precipitation field reconstruction by 2D Gaussian splatting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOpts common;
    app.add_option("--threads", common.threads, "worker threads for rendering/interpolation");
    app.add_flag("--deterministic", common.deterministic, "bitwise-reproducible accumulation");

    SynthOpts synth_o;
    auto* synth = app.add_subcommand("synth", "generate a synthetic Gaussian scene");
    synth->add_option("--seed", synth_o.seed);
    synth->add_option("--blobs", synth_o.blobs);
    synth->add_option("--rows", synth_o.rows);
    synth->add_option("--cols", synth_o.cols);
    synth->add_option("--cell-size", synth_o.cell_size);
    synth->add_option("--origin-x", synth_o.origin_x);
    synth->add_option("--origin-y", synth_o.origin_y);
    synth->add_option("--amp-lo", synth_o.amp_lo);
    synth->add_option("--amp-hi", synth_o.amp_hi);
    synth->add_option("--sigma-lo", synth_o.sigma_lo);
    synth->add_option("--sigma-hi", synth_o.sigma_hi);
    synth->add_option("--rho-lo", synth_o.rho_lo);
    synth->add_option("--rho-hi", synth_o.rho_hi);
    synth->add_option("--background", synth_o.background);
    synth->add_option("--stations", synth_o.n_stations, "number of synthetic stations");
    synth->add_option("--noise-sd", synth_o.noise_sd);
    synth->add_option("--missing-frac", synth_o.missing_frac);
    synth->add_option("--out-field", synth_o.out_field)->required();
    synth->add_option("--out-scene", synth_o.out_scene);
    synth->add_option("--out-stations", synth_o.out_stations);
    synth->add_flag("--ascii", synth_o.ascii, "write grids in the ascii format");

    SampleOpts sample_o;
    auto* sample = app.add_subcommand("sample", "draw rainfall-aware proposal points");
    sample->add_option("--field", sample_o.field, "coarse surrogate grid")->required();
    sample->add_option("--out", sample_o.out, "output points CSV")->required();
    sample->add_option("--out-prob", sample_o.out_prob, "write the proposal grid");
    add_sampling_flags(sample, sample_o.cfg);

    InterpOpts interp_o;
    auto* interp = app.add_subcommand("interp", "classical interpolation baselines");
    interp->add_option("--method", interp_o.method, "barnes | kriging | mq");
    interp->add_option("--stations", interp_o.stations)->required();
    interp->add_option("--like", interp_o.like, "grid whose spec defines the target")->required();
    interp->add_option("--out", interp_o.out)->required();
    interp->add_flag("--ascii", interp_o.ascii);
    interp->add_option("--sigma", interp_o.barnes.sigma, "Barnes kernel width (0 = from data)");
    interp->add_option("--passes", interp_o.barnes.passes);
    interp->add_option("--gamma-refine", interp_o.barnes.gamma_refine);
    interp->add_option("--variogram", interp_o.variogram, "exponential | spherical");
    interp->add_option("--nugget", interp_o.nugget);
    interp->add_option("--sill", interp_o.sill);
    interp->add_option("--range", interp_o.range);
    interp->add_option("--variogram-bins", interp_o.vbins);
    interp->add_option("--mq-c", interp_o.mq.c, "multiquadric shape (0 = from data)");
    interp->add_option("--smoothing", interp_o.mq.smoothing);

    RenderOpts render_o;
    auto* render = app.add_subcommand("render", "render a Gaussian scene to a grid");
    render->add_option("--scene", render_o.scene)->required();
    render->add_option("--like", render_o.like, "grid whose spec defines the frame")->required();
    render->add_option("--out", render_o.out)->required();
    render->add_option("--out-res", render_o.out_res, "cell-size factor (0.5 doubles resolution)");
    render->add_option("--cutoff-k", render_o.cutoff_k);
    render->add_flag("--no-cull", render_o.no_cull);
    render->add_flag("--ascii", render_o.ascii);

    EvalOpts eval_o;
    auto* eval = app.add_subcommand("eval", "verification metrics for a field pair");
    eval->add_option("--pred", eval_o.pred)->required();
    eval->add_option("--obs", eval_o.obs)->required();
    eval->add_option("--out", eval_o.out, "report path (stdout if omitted)");
    eval->add_option("--thresholds", eval_o.thresholds);
    eval->add_option("--fss-windows", eval_o.fss_windows);
    eval->add_flag("--json", eval_o.json_out);
    eval->add_flag("--plot", eval_o.plot, "emit PPM images of both fields");

    PsdOpts psd_o;
    auto* psd = app.add_subcommand("psd", "radially averaged power spectrum");
    psd->add_option("--field", psd_o.field)->required();
    psd->add_option("--out", psd_o.out, "CSV path (stdout if omitted)");
    psd->add_option("--bins", psd_o.bins);
    psd->add_flag("--plot", psd_o.plot);

    PipelineOpts pipe_o;
    auto* pipe = app.add_subcommand("pipeline", "sample -> init -> fit -> render");
    pipe->add_option("--surrogate", pipe_o.surrogate, "coarse surrogate grid")->required();
    pipe->add_option("--stations", pipe_o.stations, "anchor stations CSV");
    pipe->add_option("--target", pipe_o.target, "fit target grid (default: the surrogate)");
    pipe->add_option("--out-field", pipe_o.out_field)->required();
    pipe->add_option("--out-scene", pipe_o.out_scene);
    pipe->add_option("--out-loss", pipe_o.out_loss);
    pipe->add_option("--out-res", pipe_o.out_res, "cell-size factor for the output grid");
    pipe->add_flag("--ascii", pipe_o.ascii);
    add_sampling_flags(pipe, pipe_o.scfg);
    pipe->add_option("--lambda-sigma", pipe_o.fcfg.lambda_sigma);
    pipe->add_option("--lambda-alpha", pipe_o.fcfg.lambda_alpha);
    pipe->add_option("--iters", pipe_o.fcfg.max_iters);
    pipe->add_option("--lr", pipe_o.fcfg.learning_rate);
    pipe->add_option("--lr-schedule", pipe_o.lr_schedule, "cosine | constant");
    pipe->add_option("--grad-clip", pipe_o.fcfg.grad_clip);
    pipe->add_option("--init-sigma", pipe_o.fcfg.init_sigma);
    pipe->add_option("--tol-rel", pipe_o.fcfg.tol_rel);
    pipe->add_flag("--freeze-anchor-all", pipe_o.fcfg.freeze_anchor_all,
                   "freeze mu and sigma of anchored Gaussians too");
    pipe->add_option("--cutoff-k", pipe_o.cutoff_k);

    try {
        app.parse(argc, argv);
        g_deterministic = common.deterministic;
        if (synth->parsed()) return cmd_synth(synth_o);
        if (sample->parsed()) return cmd_sample(sample_o);
        if (interp->parsed()) return cmd_interp(interp_o, common);
        if (render->parsed()) return cmd_render(render_o, common);
        if (eval->parsed()) return cmd_eval(eval_o);
        if (psd->parsed()) return cmd_psd(psd_o);
        if (pipe->parsed()) {
            // fit seed follows the sampling seed unless set separately
            pipe_o.fcfg.seed = pipe_o.scfg.seed;
            return cmd_pipeline(pipe_o, common);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const rs::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const rs::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const rs::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
