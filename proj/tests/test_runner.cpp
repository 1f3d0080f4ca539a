#include <mixlab/runner.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace mixlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

class RunnerFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mixlab_runner_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override {
        set_default_threads(1);
        fs::remove_all(dir_);
    }

    fs::path write_config(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    int run_quiet(const fs::path& cfg, const RunOverrides& ov = {}) {
        log_.str("");
        return run(cfg, ov, log_);
    }

    fs::path dir_;
    std::ostringstream log_;
};

const char* kDecayConfig = "experiment = decay\nseed = 5\nsamples = 20000\n\n[params]\nt = 1, 2, 3\n";

} // namespace

TEST(ParseConfig, ReadsKeysAndParams) {
    const auto cfg = parse_config("# header\nexperiment = decay  # trailing\nseed = 42\nsamples = 1e4\n"
                                  "output = runs/x\n\n[params]\nt = 1, 2.5, 3\nradius = 1.5\n");
    EXPECT_EQ(cfg.experiment, Experiment::decay);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.samples, 10000u);
    EXPECT_EQ(cfg.output, "runs/x");
    EXPECT_EQ(cfg.list("t", {}), (std::vector<double>{1.0, 2.5, 3.0}));
    EXPECT_EQ(cfg.number("radius", 0.0), 1.5);
    EXPECT_EQ(cfg.number("k", 2.0), 2.0);
}

TEST(ParseConfig, RejectsWithKeyNamed) {
    auto message = [](const std::string& text) {
        try {
            run_experiment(parse_config(text));
        } catch (const InvalidInput& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("experiment = kernels\nbogus = 1\n").find("'bogus'"), std::string::npos);
    EXPECT_NE(message("experiment = decay\n[params]\nt = 1\nspeed = 2\n").find("'speed'"), std::string::npos);
    EXPECT_NE(message("experiment = decay\n").find("'t'"), std::string::npos);
    EXPECT_NE(message("seed = 1\n").find("'experiment'"), std::string::npos);
    EXPECT_NE(message("experiment = kernels\nseed = 1\nseed = 2\n").find("'seed'"), std::string::npos);
    EXPECT_NE(message("experiment = kernels\nseed = -3x\n").find("'seed'"), std::string::npos);
    EXPECT_NE(message("experiment = scheduler\n[params]\nw = 1, x\nq = 4\n").find("'w'"), std::string::npos);
    EXPECT_NE(message("experiment = teleport\n").find("teleport"), std::string::npos);
    EXPECT_NE(message("experiment = kernels\n[extras]\n").find("extras"), std::string::npos);
    EXPECT_NE(message("experiment = kernels\nsamples = 1\n").find("samples"), std::string::npos);
    EXPECT_NE(message("experiment = kernels\njust text\n").find("line 2"), std::string::npos);
}

TEST(ParseConfig, ParseNumberRejectsTrailingText) {
    EXPECT_EQ(ExperimentConfig::parse_number("x", " 2.5 "), 2.5);
    EXPECT_THROW(ExperimentConfig::parse_number("x", "2.5m"), InvalidInput);
    EXPECT_THROW(ExperimentConfig::parse_number("x", ""), InvalidInput);
}

TEST_F(RunnerFiles, KernelSuitePasses) {
    const auto cfg = write_config("kernels.cfg", "experiment = kernels\nseed = 3\nsamples = 5000\n");
    ASSERT_EQ(run_quiet(cfg), kExitOk) << log_.str();
    const std::string results = slurp(dir_ / "kernels_out" / "results.csv");
    std::istringstream is(results);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "check,value,expected,status");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        EXPECT_EQ(line.substr(line.rfind(',') + 1), "pass") << line;
    }
    EXPECT_GE(rows, 60u);
    const std::string manifest = slurp(dir_ / "kernels_out" / "manifest.txt");
    EXPECT_NE(manifest.find(kLibraryVersion), std::string::npos);
    EXPECT_NE(manifest.find("wall_time_s = "), std::string::npos);
    EXPECT_NE(manifest.find("--- config ---\nexperiment = kernels"), std::string::npos);
}

TEST_F(RunnerFiles, UnknownKeyExitsTwo) {
    const auto cfg = write_config("bad.cfg", "experiment = kernels\nsampels = 10\n");
    EXPECT_EQ(run_quiet(cfg), kExitValidation);
    EXPECT_NE(log_.str().find("'sampels'"), std::string::npos) << log_.str();
    EXPECT_FALSE(fs::exists(dir_ / "bad_out"));
    EXPECT_EQ(run_quiet(dir_ / "missing.cfg"), kExitValidation);
}

TEST_F(RunnerFiles, DecayRejectsTranslatedCoupling) {
    const auto cfg = write_config("shift.cfg", "experiment = decay\nsamples = 100\n[params]\nt = 1\ncoupling = translated_diagonal\n");
    EXPECT_EQ(run_quiet(cfg), kExitValidation);
    EXPECT_NE(log_.str().find("'coupling'"), std::string::npos) << log_.str();
}

TEST_F(RunnerFiles, DegenerateTupleExitsThree) {
    const auto cfg = write_config("flat.cfg", "experiment = coupling\nsamples = 100\n[params]\nt = 0\n");
    EXPECT_EQ(run_quiet(cfg), kExitNumeric) << log_.str();
}

TEST_F(RunnerFiles, DecayRunWritesRecordsFitAndPlot) {
    const auto cfg = write_config("decay.cfg", kDecayConfig);
    ASSERT_EQ(run_quiet(cfg), kExitOk) << log_.str();
    const fs::path out = dir_ / "decay_out";
    const std::string results = slurp(out / "results.csv");
    std::istringstream is(results);
    const auto records = read_records(is);
    ASSERT_EQ(records.size(), 3u);
    for (const auto& r : records) {
        EXPECT_EQ(r.k, 2u);
        EXPECT_EQ(r.samples, 20000u);
    }
    std::ostringstream again;
    write_records(again, records);
    EXPECT_EQ(again.str(), results);

    const std::string fit = slurp(out / "fit.csv");
    EXPECT_EQ(fit.rfind("delta_hat,intercept,r_squared,used,excluded\n", 0), 0u);
    const std::string plot = slurp(out / "decay.dat");
    EXPECT_EQ(plot, emit_plot_data(results, "decay"));
    std::size_t usable = 0;
    for (const auto& r : records) usable += usable_for_fit(r) ? 1 : 0;
    EXPECT_EQ(count_lines(plot), usable + 1);
    if (usable < 3) {
        EXPECT_EQ(count_lines(fit), 1u);
    } else {
        EXPECT_EQ(count_lines(fit), 2u);
    }
}

TEST_F(RunnerFiles, ResultsIdenticalAcrossThreadCounts) {
    const auto cfg = write_config("decay.cfg", kDecayConfig);
    std::string reference;
    for (unsigned threads : {1u, 4u, 8u}) {
        set_default_threads(threads);
        RunOverrides ov;
        ov.output = (dir_ / ("threads" + std::to_string(threads))).string();
        ASSERT_EQ(run_quiet(cfg, ov), kExitOk);
        const std::string results = slurp(*ov.output + "/results.csv") + slurp(*ov.output + "/fit.csv");
        if (reference.empty()) reference = results;
        EXPECT_EQ(results, reference) << threads << " threads";
    }
}

TEST_F(RunnerFiles, OverridesReachTheRun) {
    const auto cfg = write_config("decay.cfg", kDecayConfig);
    RunOverrides ov;
    ov.seed = 99;
    ov.samples = 4000;
    ASSERT_EQ(run_quiet(cfg, ov), kExitOk);
    std::istringstream is(slurp(dir_ / "decay_out" / "results.csv"));
    const auto records = read_records(is);
    ASSERT_FALSE(records.empty());
    EXPECT_EQ(records[0].samples, 4000u);
    EXPECT_EQ(records[0].seed, 99u);
    EXPECT_NE(slurp(dir_ / "decay_out" / "manifest.txt").find("seed = 99"), std::string::npos);
}

TEST_F(RunnerFiles, SchedulerTrace) {
    const auto cfg = write_config("sched.cfg", "experiment = scheduler\n[params]\nw = 1, 0.001\nq = 1000\n");
    ASSERT_EQ(run_quiet(cfg), kExitOk) << log_.str();
    const fs::path out = dir_ / "sched_out";
    const std::string schedule = slurp(out / "schedule.csv");
    EXPECT_EQ(schedule.rfind("p,i,T,delta\n", 0), 0u);
    const std::string trace = slurp(out / "trace.csv");
    EXPECT_GT(count_lines(trace), 1u);
    EXPECT_EQ(emit_plot_data(trace, "scheduler"), slurp(out / "scheduler.dat"));
}

TEST_F(RunnerFiles, ConfigsExperiment) {
    const auto cfg = write_config("conf.cfg", "experiment = configs\nseed = 2\n[params]\nepsilon = 0.5, 0.3\n"
                                              "upper = 4\nepsilons = 0.3, 0.9\nwidths = 0.5, 1.5\ntrials = 2\n");
    ASSERT_EQ(run_quiet(cfg), kExitOk) << log_.str();
    const fs::path out = dir_ / "conf_out";
    const std::string density = slurp(out / "density.csv");
    EXPECT_EQ(count_lines(density), 3u);
    EXPECT_EQ(emit_plot_data(density, "density"), slurp(out / "density.dat"));
    EXPECT_EQ(count_lines(slurp(out / "success.csv")), 5u);
    EXPECT_TRUE(fs::exists(out / "constants.csv"));
}

TEST_F(RunnerFiles, CouplingExperiment) {
    const auto cfg = write_config("coup.cfg", "experiment = coupling\nsamples = 400\n[params]\nnorm_samples = 200\nT = 1, 4\n");
    ASSERT_EQ(run_quiet(cfg), kExitOk) << log_.str();
    const fs::path out = dir_ / "coup_out";
    const std::string et = slurp(out / "et.csv");
    EXPECT_EQ(count_lines(et), 3u);
    EXPECT_EQ(emit_plot_data(et, "et"), slurp(out / "et.dat"));
    const std::string diag = slurp(out / "diagnostics.txt");
    EXPECT_NE(diag.find("# eta = m x m"), std::string::npos);
    EXPECT_NE(diag.find("# eta = translated diagonal"), std::string::npos);
}

TEST_F(RunnerFiles, NormsExperiment) {
    const auto cfg = write_config("norms.cfg", "experiment = norms\nsamples = 300\n[params]\nradii = 0.6, 0.8\n"
                                               "probe_eps = 0.02, 0.04\nlambdas = 2\n");
    ASSERT_EQ(run_quiet(cfg), kExitOk) << log_.str();
    const std::string results = slurp(dir_ / "norms_out" / "results.csv");
    EXPECT_NE(results.find("all_finite,1"), std::string::npos) << results;
    EXPECT_TRUE(fs::exists(dir_ / "norms_out" / "dictionary.txt"));
}

TEST(PlotData, DecayKeepsUsableRecordsOnly) {
    CorrelationRecord good;
    good.k = 2;
    good.t_params = "t=1";
    good.abs_error = 0.1;
    good.stderr = 0.01;
    good.M_hat = 3.0;
    CorrelationRecord noisy = good;
    noisy.abs_error = 0.01;
    std::ostringstream os;
    const std::vector<CorrelationRecord> records{good, noisy};
    write_records(os, records);
    const std::string plot = emit_plot_data(os.str(), "decay");
    EXPECT_EQ(plot, "# log_M_hat log_abs_error\n" + format_double(std::log(3.0)) + ' ' + format_double(std::log(0.1)) + '\n');
}

TEST(PlotData, EmptyUsableSetWarns) {
    CorrelationRecord noisy;
    noisy.k = 2;
    noisy.t_params = "t=1";
    noisy.stderr = 1.0;
    std::ostringstream os;
    const std::vector<CorrelationRecord> records{noisy};
    write_records(os, records);
    std::vector<std::string> warnings;
    const std::string plot = emit_plot_data(os.str(), "decay", &warnings);
    EXPECT_EQ(count_lines(plot), 1u);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(PlotData, RejectsUnknownOrMismatchedKind) {
    EXPECT_THROW(emit_plot_data("T,E_T,stderr\n", "histogram"), InvalidInput);
    EXPECT_THROW(emit_plot_data("p,i,T,delta\n", "scheduler"), InvalidInput);
    EXPECT_THROW(emit_plot_data("x\n", "decay"), InvalidInput);
    EXPECT_EQ(emit_plot_data("T,E_T,stderr\n1,1,0\n", "et"), "# log_T log_E_T\n0 0\n");
}
