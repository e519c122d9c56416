#include <fstream>
#include <ostream>

#include <fmt/core.h>

#include "stormforge/cli.hpp"
#include "stormforge/error.hpp"
#include "stormforge/illumination.hpp"
#include "stormforge/png_io.hpp"
#include "stormforge/rain.hpp"

namespace stormforge::cli {

RenderStats render_file(const fs::path& params_file, const fs::path& input, const fs::path& output) {
  std::ifstream in(params_file);
  if (!in) throw Error(Errc::kConfig, "params file not found: " + params_file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfig, "params file is not valid JSON: " + std::string(e.what()));
  }

  FieldReader r(j, "");
  double w = 0.3;
  r.read("mixing_weight", w);
  if (!(w >= 0.0 && w <= 1.0)) r.fail("mixing_weight", "must lie in [0, 1]");
  RainParams rain;
  IlluminationParams lights = default_illumination();
  if (const Json* rj = r.child("rain")) rain = rain_from_json(*rj, "rain", rain);
  if (const Json* lj = r.child("illumination")) lights = illumination_from_json(*lj, "illumination", lights);
  r.finish();

  const Image clean = load_png(input);
  const GrayMap layer = render_rain(rain, clean.height(), clean.width());
  const GrayMap gain = gain_map(lights, clean.height(), clean.width());
  const Image out = apply_gain(blend(clean, rain_to_image(layer), w), gain);
  save_png(out, output);

  const GainStats g = gain_stats(gain);
  return {g.mean, g.max, coverage_fraction(layer)};
}

int cmd_render(const fs::path& params_file, const fs::path& input, const fs::path& output, std::ostream& out) {
  try {
    const RenderStats s = render_file(params_file, input, output);
    out << fmt::format("mean_gain={:.6f} max_gain={:.6f} rain_coverage={:.6f}\n", s.mean_gain, s.max_gain,
                       s.rain_coverage);
    return kExitOk;
  } catch (const Error& e) {
    out << (e.code() == Errc::kConfig || e.code() == Errc::kInvalidArgument ? "config error: " : "error: ")
        << e.what() << '\n';
    return e.code() == Errc::kConfig || e.code() == Errc::kInvalidArgument ? kExitConfig : kExitFailure;
  }
}

}  // namespace stormforge::cli
