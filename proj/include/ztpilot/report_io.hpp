#pragma once

// EvalReport serialization: an aligned human-readable table (one decimal
// place) and a machine-readable JSON tree at full precision. Also parses the
// channel spec files consumed by the evaluate command.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "evaluator.hpp"
#include "io.hpp"
#include "types.hpp"

namespace ztpilot {

namespace detail {
inline std::string db1(double v) {
  if (std::isnan(v)) return "--";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}
}  // namespace detail

inline void write_report_text(std::ostream& os, const EvalReport& rep) {
  const std::size_t n = rep.acf_db.size();
  os << "pilot set report (" << n << " pilots)\n";
  os << std::left << std::setw(8) << "pilot" << std::setw(10) << "acf_db" << std::setw(12)
     << "mixture_db" << std::setw(10) << "papr_db";
  if (!rep.channel_db.empty()) os << std::setw(12) << "channel_db";
  os << "\n";
  for (std::size_t p = 0; p < n; ++p) {
    os << std::left << std::setw(8) << p << std::setw(10) << detail::db1(rep.acf_db[p])
       << std::setw(12) << detail::db1(rep.mixture_db[p]) << std::setw(10)
       << detail::db1(rep.papr_db[p]);
    if (!rep.channel_db.empty()) os << std::setw(12) << detail::db1(rep.channel_db[p]);
    os << "\n";
  }
  if (n > 1) {
    os << "pairwise MCF main-to-side (dB):\n";
    for (std::size_t i = 0; i < n; ++i) {
      os << "  ";
      for (std::size_t j = 0; j < n; ++j)
        os << std::setw(8) << (i == j ? std::string("--") : detail::db1(rep.mcf_db[i][j]));
      os << "\n";
    }
  }
  os << "worst acf_db      = " << detail::db1(rep.worst_acf_db) << "\n";
  os << "worst mixture_db  = " << detail::db1(rep.worst_mixture_db) << "\n";
  os << "mean mixture_db   = " << detail::db1(rep.mean_mixture_db) << "\n";
  if (!rep.channel_db.empty())
    os << "worst channel_db  = " << detail::db1(rep.worst_channel_db) << "\n";
  os << "worst papr_db     = " << detail::db1(rep.worst_papr_db) << "\n";
  if (!std::isnan(rep.slot_savings_pct)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", rep.slot_savings_pct);
    os << "slot savings      = " << buf << "%\n";
  }
  if (!rep.sanity_ok) os << "SANITY: " << rep.sanity_note << "\n";
}

namespace detail {
inline nlohmann::json json_num(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}
}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& rep) {
  nlohmann::json j;
  auto arr = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(detail::json_num(x));
    return a;
  };
  j["acf_db"] = arr(rep.acf_db);
  j["mixture_db"] = arr(rep.mixture_db);
  j["channel_db"] = arr(rep.channel_db);
  j["papr_db"] = arr(rep.papr_db);
  j["papr_full_db"] = arr(rep.papr_full_db);
  nlohmann::json m = nlohmann::json::array();
  for (const auto& row : rep.mcf_db) m.push_back(arr(row));
  j["mcf_db"] = m;
  j["worst_acf_db"] = detail::json_num(rep.worst_acf_db);
  j["worst_mixture_db"] = detail::json_num(rep.worst_mixture_db);
  j["mean_mixture_db"] = detail::json_num(rep.mean_mixture_db);
  j["worst_channel_db"] = detail::json_num(rep.worst_channel_db);
  j["worst_papr_db"] = detail::json_num(rep.worst_papr_db);
  j["slot_savings_pct"] = detail::json_num(rep.slot_savings_pct);
  j["sanity_ok"] = rep.sanity_ok;
  j["sanity_note"] = rep.sanity_note;
  j["config"] = rep.config_snapshot;
  return j;
}

inline void write_report_json(const std::string& path, const EvalReport& rep) {
  atomic_write(path, [&](std::ostream& os) { os << report_to_json(rep).dump(2) << "\n"; });
}

// Channel spec file: '#' comments; one line per pilot, either explicit taps
//   pilot <i> pl_db <x> taps <delay>:<re>:<im> [...]
// or a seeded random draw
//   pilot <i> random seed <s> taps <n> max_delay <d> decay_db <x> [pl_db <x>]
inline std::vector<ChannelModel> parse_channel_file(const std::string& path, std::size_t n_pilots) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open channel spec: " + path);
  std::vector<ChannelModel> channels(n_pilots);
  std::vector<bool> seen(n_pilots, false);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word != "pilot")
      throw ConfigError("channel spec: expected 'pilot <index> ...'", line_no);
    std::size_t idx = 0;
    if (!(ls >> idx) || idx >= n_pilots)
      throw ConfigError("channel spec: pilot index out of range", line_no);
    if (seen[idx]) throw ConfigError("channel spec: duplicate pilot " + std::to_string(idx), line_no);
    seen[idx] = true;

    std::string mode;
    if (!(ls >> mode)) throw ConfigError("channel spec: missing channel definition", line_no);
    if (mode == "random") {
      std::uint64_t seed = 0;
      int n_taps = 3, max_delay = 4;
      double decay_db = 20.0, pl_db = 0.0;
      std::string key;
      while (ls >> key) {
        if (key == "seed") ls >> seed;
        else if (key == "taps") ls >> n_taps;
        else if (key == "max_delay") ls >> max_delay;
        else if (key == "decay_db") ls >> decay_db;
        else if (key == "pl_db") ls >> pl_db;
        else throw ConfigError("channel spec: unknown key '" + key + "'", line_no);
      }
      channels[idx] = make_random_channel(seed, n_taps, max_delay, decay_db);
      channels[idx].path_loss_db = pl_db;
    } else if (mode == "pl_db") {
      ChannelModel ch;
      if (!(ls >> ch.path_loss_db)) throw ConfigError("channel spec: missing pl_db value", line_no);
      std::string key;
      if (!(ls >> key) || key != "taps")
        throw ConfigError("channel spec: expected 'taps' after pl_db", line_no);
      std::string tap;
      while (ls >> tap) {
        int delay = 0;
        double re = 0.0, im = 0.0;
        if (std::sscanf(tap.c_str(), "%d:%lf:%lf", &delay, &re, &im) != 3)
          throw ConfigError("channel spec: malformed tap '" + tap + "'", line_no);
        ch.taps.push_back({delay, cxd(re, im)});
      }
      if (ch.taps.empty()) throw ConfigError("channel spec: no taps given", line_no);
      channels[idx] = ch;
    } else {
      throw ConfigError("channel spec: expected 'pl_db' or 'random', got '" + mode + "'", line_no);
    }
  }
  for (std::size_t i = 0; i < n_pilots; ++i)
    if (!seen[i])
      throw ConfigError("channel spec: missing channel for pilot " + std::to_string(i));
  return channels;
}

}  // namespace ztpilot
