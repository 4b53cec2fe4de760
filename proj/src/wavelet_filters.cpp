#include <map>
#include <stdexcept>

#include "fxh/wavelet.hpp"

namespace fxh {

namespace {

// Decomposition lowpass taps (orthonormal, sum = sqrt(2)).
const std::vector<double> kHaarLowpass = {
    0.7071067811865476,
    0.7071067811865476,
};

const std::vector<double> kDb2Lowpass = {
    -0.12940952255126037,
    0.2241438680420134,
    0.8365163037378079,
    0.48296291314453416,
};

const std::vector<double> kDb4Lowpass = {
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
};

const std::vector<double> kSym4Lowpass = {
    -0.07576571478927333,
    -0.02963552764599851,
    0.49761866763201545,
    0.8037387518059161,
    0.29785779560527736,
    -0.09921954357684722,
    -0.012603967262037833,
    0.0322231006040427,
};

const std::vector<double> kSym8Lowpass = {
    -0.0033824159510061256,
    -0.0005421323317911481,
    0.03169508781149298,
    0.007607487324917605,
    -0.1432942383508097,
    -0.061273359067658524,
    0.4813596512583722,
    0.7771857517005235,
    0.3644418948353314,
    -0.05194583810770904,
    -0.027219029917056003,
    0.049137179673607506,
    0.003808752013890615,
    -0.01495225833704823,
    -0.0003029205147213668,
    0.0018899503327594609,
};

const std::vector<double> kSym15Lowpass = {
    9.712419737963348e-06,
    -7.35966679891947e-06,
    -0.00016066186637495343,
    5.512254785558665e-05,
    0.0010705672194623959,
    -0.0002673164464718057,
    -0.0035901654473726417,
    0.003423450736351241,
    0.01007997708790567,
    -0.01940501143093447,
    -0.03887671687683349,
    0.021937642719753955,
    0.04073547969681068,
    -0.04108266663538248,
    0.11153369514261872,
    0.5786404152150345,
    0.7218430296361812,
    0.2439627054321663,
    -0.1966263587662373,
    -0.1340562984562539,
    0.06839331006048024,
    0.06796982904487918,
    -0.008744788886477952,
    -0.01717125278163873,
    0.0015261382781819983,
    0.003481028737064895,
    -0.00010815440168545525,
    -0.00040216853760293483,
    2.171789015077892e-05,
    2.866070852531808e-05,
};

const std::map<std::string, WaveletFilter, std::less<>>& registry() {
  static const std::map<std::string, WaveletFilter, std::less<>> filters = [] {
    std::map<std::string, WaveletFilter, std::less<>> m;
    m.emplace("haar", WaveletFilter::from_lowpass("haar", kHaarLowpass));
    m.emplace("db2", WaveletFilter::from_lowpass("db2", kDb2Lowpass));
    m.emplace("db4", WaveletFilter::from_lowpass("db4", kDb4Lowpass));
    m.emplace("sym4", WaveletFilter::from_lowpass("sym4", kSym4Lowpass));
    m.emplace("sym8", WaveletFilter::from_lowpass("sym8", kSym8Lowpass));
    m.emplace("sym15", WaveletFilter::from_lowpass("sym15", kSym15Lowpass));
    return m;
  }();
  return filters;
}

}  // namespace

const WaveletFilter& wavelet_filter(std::string_view name) {
  const auto& r = registry();
  auto it = r.find(name);
  if (it == r.end()) throw std::invalid_argument("unknown wavelet '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> registered_wavelets() {
  std::vector<std::string> names;
  for (const auto& [name, filter] : registry()) names.push_back(name);
  return names;
}

}  // namespace fxh
