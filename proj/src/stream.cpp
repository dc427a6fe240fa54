#include "mashvco/stream.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mashvco {

SampleStream generate_tone_sum(std::span<const Tone> tones, double offset,
                               double rate, std::size_t n,
                               const std::string& label) {
    if (rate <= 0.0) throw std::invalid_argument("generate_tone_sum: rate must be positive");
    for (const Tone& t : tones) {
        if (t.freq >= rate / 2.0 || t.freq < 0.0)
            throw std::invalid_argument("generate_tone_sum: tone frequency outside [0, rate/2)");
    }
    SampleStream s;
    s.rate = rate;
    s.label = label;
    s.samples.resize(n);
    const double two_pi = 2.0 * M_PI;
    for (std::size_t k = 0; k < n; ++k) {
        double v = offset;
        double t = static_cast<double>(k) / rate;
        for (const Tone& tn : tones) v += tn.amp * std::sin(two_pi * tn.freq * t + tn.phase_rad);
        s.samples[k] = v;
    }
    return s;
}

void write_csv(const SampleStream& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    f.precision(17);
    f << "label," << s.label << "\n";
    f << "rate," << s.rate << "\n";
    for (double v : s.samples) f << v << "\n";
    if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

SampleStream read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    SampleStream s;
    if (!std::getline(f, line) || line.rfind("label,", 0) != 0)
        throw std::runtime_error("read_csv: missing label header in " + path);
    s.label = line.substr(6);
    if (!s.label.empty() && s.label.back() == '\r') s.label.pop_back();
    if (!std::getline(f, line) || line.rfind("rate,", 0) != 0)
        throw std::runtime_error("read_csv: missing rate header in " + path);
    s.rate = std::stod(line.substr(5));
    if (!(s.rate > 0.0)) throw std::runtime_error("read_csv: nonpositive rate in " + path);
    while (std::getline(f, line)) {
        if (line.empty() || line == "\r") continue;
        s.samples.push_back(std::stod(line));
    }
    return s;
}

void write_f64(const SampleStream& s, const std::string& path) {
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("write_f64: cannot open " + path);
        static_assert(sizeof(double) == 8);
        f.write(reinterpret_cast<const char*>(s.samples.data()),
                static_cast<std::streamsize>(s.samples.size() * sizeof(double)));
        if (!f) throw std::runtime_error("write_f64: write failed for " + path);
    }
    nlohmann::json j;
    j["schema"] = 1;
    j["label"] = s.label;
    j["rate"] = s.rate;
    j["count"] = s.samples.size();
    std::ofstream jf(path + ".json");
    if (!jf) throw std::runtime_error("write_f64: cannot open " + path + ".json");
    jf << j.dump(2) << "\n";
}

SampleStream read_f64(const std::string& path) {
    std::ifstream jf(path + ".json");
    if (!jf) throw std::runtime_error("read_f64: missing sidecar " + path + ".json");
    nlohmann::json j = nlohmann::json::parse(jf);
    SampleStream s;
    s.label = j.at("label").get<std::string>();
    s.rate = j.at("rate").get<double>();
    std::size_t count = j.at("count").get<std::size_t>();
    s.samples.resize(count);
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_f64: cannot open " + path);
    f.read(reinterpret_cast<char*>(s.samples.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(f.gcount()) != count * sizeof(double))
        throw std::runtime_error("read_f64: short read in " + path);
    return s;
}

} // namespace mashvco
