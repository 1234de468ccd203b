#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semcert/errors.hpp"
#include "semcert/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kMissing = 3, kNumeric = 4 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path, "configuration file (key = value lines)")->required();
  cmd->add_option("-s,--set", common.overrides, "override a configuration key: key=value")->take_all();
}

semcert::RunConfig resolve(const Common& common) {
  semcert::KeyValueConfig kv = semcert::KeyValueConfig::load(common.config_path);
  for (const auto& o : common.overrides) kv.set_assignment(o);
  return semcert::RunConfig::from(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certification of classifiers against semantic image transformations"};
  app.require_subcommand(1);

  Common common;
  std::size_t image = 0;
  std::vector<double> beta;

  auto* bounds = app.add_subcommand("bounds", "estimate the bound table for the configured transform chain");
  auto* certify = app.add_subcommand("certify", "certify one image over the attack box or at --beta");
  auto* cra = app.add_subcommand("cra", "certified robust accuracy over the dataset");
  auto* heatmap = app.add_subcommand("heatmap", "certified accuracy at each point of a 1D/2D parameter grid");
  auto* train = app.add_subcommand("train", "train the built-in classifier with transform augmentation");
  auto* xi = app.add_subcommand("xi-export", "write the p and xi curves as CSV");
  auto* synth = app.add_subcommand("synth-data", "generate the synthetic 28x28 dataset as IDX files");
  for (auto* cmd : {bounds, certify, cra, heatmap, train, xi, synth}) add_common(cmd, common);
  certify->add_option("-i,--image", image, "image index in the dataset");
  certify->add_option("-b,--beta", beta, "single attack parameter instead of the configured box");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const semcert::RunConfig cfg = resolve(common);
    if (bounds->parsed()) {
      std::cout << semcert::cmd_bounds(cfg, &std::cerr).string() << '\n';
    } else if (certify->parsed()) {
      std::optional<semcert::Params> point;
      if (!beta.empty()) point = Eigen::Map<const semcert::Params>(beta.data(), static_cast<Eigen::Index>(beta.size()));
      std::cout << semcert::cmd_certify(cfg, image, point);
    } else if (cra->parsed()) {
      semcert::cmd_cra(cfg, &std::cout);
    } else if (heatmap->parsed()) {
      std::cout << semcert::cmd_heatmap(cfg).string() << '\n';
    } else if (train->parsed()) {
      std::cout << "epoch,loss,acc\n";
      const auto path = semcert::cmd_train(cfg, &std::cout);
      std::cerr << "saved " << path.string() << '\n';
    } else if (xi->parsed()) {
      std::cout << semcert::cmd_xi_export(cfg).string() << '\n';
    } else if (synth->parsed()) {
      std::cout << semcert::cmd_synth_data(cfg).string() << '\n';
    }
  } catch (const semcert::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const semcert::MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kMissing;
  } catch (const semcert::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
