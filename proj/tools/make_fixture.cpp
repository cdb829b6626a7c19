// Regenerates the synthetic Spanglish-style fixture corpus under
// data/fixture/: a CS dataset (train/valid/test) plus an EN pool sharing the
// same intents, slot labels, and slot value inventory. Deterministic; the
// checked-in files are this tool's output.
//
//   ./make_fixture <output_dir>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cstk/rng.hpp"
#include "cstk/seqlogical.hpp"

using nlohmann::json;

namespace {

struct Template {
  std::string intent;
  std::string domain;
  std::string pattern;  // tokens, {SLOT_LABEL} placeholders
};

const std::vector<Template> kCsTemplates = {
    {"GET_WEATHER", "weather", "dime el clima en {LOCATION}"},
    {"GET_WEATHER", "weather", "dime el clima para {DATE_TIME}"},
    {"GET_WEATHER", "weather", "que clima hace en {LOCATION} {DATE_TIME}"},
    {"GET_WEATHER", "weather", "como esta el weather en {LOCATION}"},
    {"GET_WEATHER", "weather", "quiero saber el clima de {LOCATION} para {DATE_TIME}"},
    {"GET_WEATHER", "weather", "dame el forecast {DATE_TIME} porfa"},
    {"UNSUPPORTED_WEATHER", "weather", "cuantos centimeters va a llover {DATE_TIME}"},
    {"UNSUPPORTED_WEATHER", "weather", "va a nevar mucho {DATE_TIME}"},
    {"UNSUPPORTED_WEATHER", "weather", "dime si cae lluvia fuerte {DATE_TIME}"},
    {"OPEN_APP", "device", "abreme el {APP}"},
    {"OPEN_APP", "device", "abre {APP} por favor"},
    {"OPEN_APP", "device", "puedes abrir {APP} ahora"},
    {"CLOSE_APP", "device", "cierra {APP}"},
    {"CLOSE_APP", "device", "quita el {APP} ya"},
    {"CLOSE_APP", "device", "cierrame {APP} porfa"},
    {"TURN_ON", "device", "prende el {COMPONENT}"},
    {"TURN_ON", "device", "enciende {COMPONENT} por favor"},
    {"TURN_ON", "device", "activa el {COMPONENT} ya"},
    {"TURN_OFF", "device", "apaga el {COMPONENT}"},
    {"TURN_OFF", "device", "desactiva {COMPONENT} ya"},
    {"TURN_OFF", "device", "quita el {COMPONENT} porfa"},
    {"SET_BRIGHTNESS", "device", "sube el brightness al {PERCENT}"},
    {"SET_BRIGHTNESS", "device", "pon el brillo en {PERCENT}"},
    {"SET_BRIGHTNESS", "device", "deja la pantalla al {PERCENT}"},
    {"PLAY_MUSIC", "device", "pon musica de {ARTIST}"},
    {"PLAY_MUSIC", "device", "toca algo de {ARTIST} porfa"},
    {"PLAY_MUSIC", "device", "quiero escuchar {ARTIST}"},
};

const std::vector<Template> kEnTemplates = {
    {"GET_WEATHER", "weather", "show me the weather in {LOCATION}"},
    {"GET_WEATHER", "weather", "what is the weather for {DATE_TIME}"},
    {"GET_WEATHER", "weather", "how is the weather in {LOCATION} {DATE_TIME}"},
    {"GET_WEATHER", "weather", "tell me the weather in {LOCATION} for {DATE_TIME}"},
    {"GET_WEATHER", "weather", "give me the forecast {DATE_TIME} please"},
    {"UNSUPPORTED_WEATHER", "weather", "how many centimeters will it rain {DATE_TIME}"},
    {"UNSUPPORTED_WEATHER", "weather", "will it snow a lot {DATE_TIME}"},
    {"UNSUPPORTED_WEATHER", "weather", "tell me if heavy rain falls {DATE_TIME}"},
    {"OPEN_APP", "device", "open the {APP}"},
    {"OPEN_APP", "device", "open {APP} please"},
    {"OPEN_APP", "device", "can you open {APP} now"},
    {"CLOSE_APP", "device", "close {APP}"},
    {"CLOSE_APP", "device", "remove the {APP} now"},
    {"CLOSE_APP", "device", "close {APP} for me"},
    {"TURN_ON", "device", "turn on the {COMPONENT}"},
    {"TURN_ON", "device", "switch {COMPONENT} on please"},
    {"TURN_ON", "device", "enable the {COMPONENT} now"},
    {"TURN_OFF", "device", "turn off the {COMPONENT}"},
    {"TURN_OFF", "device", "disable {COMPONENT} now"},
    {"TURN_OFF", "device", "switch the {COMPONENT} off"},
    {"SET_BRIGHTNESS", "device", "set the brightness to {PERCENT}"},
    {"SET_BRIGHTNESS", "device", "put the screen at {PERCENT}"},
    {"SET_BRIGHTNESS", "device", "leave the display at {PERCENT}"},
    {"PLAY_MUSIC", "device", "play music by {ARTIST}"},
    {"PLAY_MUSIC", "device", "play something by {ARTIST} please"},
    {"PLAY_MUSIC", "device", "i want to hear {ARTIST}"},
};

const std::map<std::string, std::vector<std::string>> kValues = {
    {"DATE_TIME",
     {"next monday", "next friday", "this weekend", "tonight", "tomorrow", "friday morning",
      "next week", "sunday night", "this afternoon", "monday", "early tomorrow", "next tuesday",
      "saturday evening", "in two hours", "later today", "next month", "wednesday", "this evening",
      "tomorrow night", "on thursday", "next saturday", "around noon", "at sunrise", "by midnight"}},
    {"LOCATION",
     {"boston", "miami", "seattle", "austin", "denver", "chicago", "portland", "dallas", "phoenix",
      "orlando", "tucson", "memphis", "oakland", "tampa", "reno", "omaha", "fresno", "boise",
      "atlanta", "detroit", "houston", "madison", "raleigh", "tulsa"}},
    {"APP",
     {"maps", "gallery", "spotify", "camera", "calendar", "mail", "chrome", "youtube", "settings",
      "clock", "notes", "files", "podcasts", "translate", "photos", "messenger"}},
    {"COMPONENT",
     {"privacy mode", "bluetooth", "wifi", "flashlight", "dark mode", "airplane mode", "hotspot",
      "night light", "battery saver", "sound", "vibration", "location services"}},
    {"PERCENT", {"10", "15", "20", "25", "30", "40", "50", "60", "65", "70", "75", "80", "90"}},
    {"ARTIST",
     {"shakira", "bad bunny", "queen", "coldplay", "rosalia", "drake", "metallica", "adele",
      "karol g", "maluma", "the beatles", "daft punk", "rihanna", "feid", "bts", "am"}},
};

struct Instantiated {
  std::string seqlogical;
  std::string domain;
};

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::string tok;
  for (char c : text) {
    if (c == ' ') {
      if (!tok.empty()) out.push_back(tok);
      tok.clear();
    } else {
      tok += c;
    }
  }
  if (!tok.empty()) out.push_back(tok);
  return out;
}

Instantiated instantiate(const Template& tpl, std::map<std::string, std::size_t>& value_cursor,
                         cstk::Rng& rng, bool round_robin) {
  cstk::Utterance utt;
  cstk::SemanticParse parse;
  parse.intent = tpl.intent;
  for (const std::string& piece : split(tpl.pattern)) {
    if (piece.front() == '{' && piece.back() == '}') {
      const std::string label = piece.substr(1, piece.size() - 2);
      const std::vector<std::string>& pool = kValues.at(label);
      std::size_t pick;
      if (round_robin) {
        pick = value_cursor[label]++ % pool.size();
      } else {
        pick = rng.below(pool.size());
      }
      const int start = static_cast<int>(utt.tokens.size());
      for (const std::string& tok : split(pool[pick])) utt.tokens.push_back(tok);
      parse.slots.push_back({label, start, static_cast<int>(utt.tokens.size())});
    } else {
      utt.tokens.push_back(piece);
    }
  }
  utt = cstk::Utterance::from_tokens(std::move(utt.tokens));
  return {cstk::serialize_seqlogical(utt, parse), tpl.domain};
}

void write_split(const std::string& path, const std::string& prefix,
                 const std::vector<Template>& templates, int count, const std::string& language,
                 cstk::Rng& rng, bool round_robin) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", path.c_str());
    std::exit(1);
  }
  std::map<std::string, std::size_t> value_cursor;
  std::set<std::string> seen;
  int written = 0;
  int attempts = 0;
  while (written < count && attempts < count * 60) {
    ++attempts;
    const Template& tpl = templates[rng.below(templates.size())];
    const Instantiated inst = instantiate(tpl, value_cursor, rng, round_robin);
    if (!seen.insert(inst.seqlogical).second) continue;
    json record;
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%04d", prefix.c_str(), written);
    record["id"] = id;
    record["domain"] = inst.domain;
    record["seqlogical"] = inst.seqlogical;
    record["language"] = language;
    out << record.dump() << '\n';
    ++written;
  }
  if (written < count) {
    std::fprintf(stderr, "only generated %d/%d for %s\n", written, count, path.c_str());
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <output_dir>\n", argv[0]);
    return 2;
  }
  const std::string dir = argv[1];
  // Round-robin value selection in train guarantees every slot value occurs;
  // valid/test sample freely from the same inventories.
  cstk::Rng train_rng(cstk::derive_seed(2024, "fixture-train"));
  write_split(dir + "/train.jsonl", "cs-train", kCsTemplates, 600, "cs", train_rng, true);
  cstk::Rng valid_rng(cstk::derive_seed(2024, "fixture-valid"));
  write_split(dir + "/valid.jsonl", "cs-valid", kCsTemplates, 100, "cs", valid_rng, false);
  cstk::Rng test_rng(cstk::derive_seed(2024, "fixture-test"));
  write_split(dir + "/test.jsonl", "cs-test", kCsTemplates, 200, "cs", test_rng, false);
  cstk::Rng pool_rng(cstk::derive_seed(2024, "fixture-pool"));
  write_split(dir + "/en_pool.jsonl", "en-pool", kEnTemplates, 800, "en", pool_rng, true);
  std::printf("fixture written to %s\n", dir.c_str());
  return 0;
}
