// Writes the bundled scenarios and the scalability template.
#include "evshare/ieee33.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Generate bundled evshare data files"};
  std::string dir = "data";
  int seeds = 6;
  app.add_option("--dir", dir, "Output directory");
  app.add_option("--seeds", seeds, "Write seeds 1..N (seed 1 is the base scenario)")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(dir);
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto s = evshare::make_ieee33_scenario(static_cast<std::uint64_t>(seed));
    const auto path = std::filesystem::path(dir) / (s.name + ".json");
    evshare::save_scenario(s, path.string());
    std::cout << path.string() << "\n";
  }
  const auto tpl = evshare::make_scale_template();
  const auto path = std::filesystem::path(dir) / "ieee33_scale_template.json";
  evshare::save_scale_template(tpl, path.string());
  std::cout << path.string() << "\n";
  return 0;
}
