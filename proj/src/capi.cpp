#include "filtercrawl/filtercrawl.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "filtercrawl/error.hpp"
#include "filtercrawl/session.hpp"

using nlohmann::json;

struct fc_session {
  std::unique_ptr<filtercrawl::Session> impl;
};

namespace {

thread_local std::string last_error;

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p)
    throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// Library diagnostics go to stderr so stdout stays free for results.
void init_logging() {
  static const bool done = [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("filtercrawl"));
    if (const char* level = std::getenv("FILTERCRAWL_LOG_LEVEL"))
      spdlog::set_level(spdlog::level::from_str(level));
    return true;
  }();
  (void)done;
}

template <typename F>
fc_status guarded(F&& body) {
  init_logging();
  last_error.clear();
  try {
    body();
    return FC_OK;
  } catch (const filtercrawl::ConfigError& e) {
    last_error = e.what();
    return FC_ERR_CONFIG;
  } catch (const filtercrawl::RunAborted& e) {
    last_error = e.what();
    return FC_ERR_ABORTED;
  } catch (const filtercrawl::IoError& e) {
    last_error = e.what();
    return FC_ERR_IO;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return FC_ERR_IO;
  } catch (const filtercrawl::InvalidInput& e) {
    last_error = e.what();
    return FC_ERR_INVALID;
  } catch (const json::exception& e) {
    last_error = e.what();
    return FC_ERR_INVALID;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FC_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return FC_ERR_INTERNAL;
  }
}

fc_status missing(const char* what) {
  last_error = std::string(what) + " must not be NULL";
  return FC_ERR_INVALID;
}

} // namespace

extern "C" {

const char* fc_version(void) { return "1.0.0"; }

const char* fc_last_error(void) { return last_error.c_str(); }

void fc_string_free(char* s) { std::free(s); }

fc_status fc_session_open(const char* config_json, fc_session** out) {
  if (!out)
    return missing("out");
  *out = nullptr;
  return guarded([&] {
    json doc = json::object();
    if (config_json && *config_json) {
      try {
        doc = json::parse(config_json);
      } catch (const json::exception& e) {
        throw filtercrawl::ConfigError(std::string("configuration is not valid JSON: ") + e.what());
      }
    }
    auto session = std::make_unique<fc_session>();
    session->impl = std::make_unique<filtercrawl::Session>(filtercrawl::run_config_from_json(doc));
    *out = session.release();
  });
}

void fc_session_close(fc_session* session) { delete session; }

fc_status fc_session_country(fc_session* session, char** country_out) {
  if (!session || !country_out)
    return missing("session and country_out");
  return guarded([&] { *country_out = dup_string(session->impl->profile().country); });
}

fc_status fc_check(fc_session* session, const char* domains_text, char** verdicts_jsonl_out) {
  if (!session || !domains_text || !verdicts_jsonl_out)
    return missing("session, domains_text and verdicts_jsonl_out");
  return guarded([&] { *verdicts_jsonl_out = dup_string(session->impl->check(domains_text)); });
}

fc_status fc_crawl(fc_session* session, const char* seeds_text, int resume, char** result_json_out) {
  if (!session || !seeds_text || !result_json_out)
    return missing("session, seeds_text and result_json_out");
  return guarded([&] {
    auto outcome = session->impl->crawl(seeds_text, resume != 0);
    const auto& state = outcome.state;
    json discovered = json::array();
    for (const auto& d : state.discovered())
      discovered.push_back(d.str());
    const auto st = state.stats();
    json result{{"stop_reason", state.stop_reason},
                {"country", state.country},
                {"discovered", discovered},
                {"rejected_seeds", outcome.rejected_seeds},
                {"stats",
                 {{"urls_extracted", st.urls_extracted},
                  {"urls_filtered", st.urls_filtered},
                  {"domains_filtered", st.domains_filtered},
                  {"pages_fetched", st.pages_fetched},
                  {"fetch_attempts", st.fetch_attempts},
                  {"probes", st.probes}}}};
    *result_json_out = dup_string(result.dump(2) + "\n");
  });
}

fc_status fc_enumerate(fc_session* session, const char* domains_text, char** csv_out) {
  if (!session || !domains_text || !csv_out)
    return missing("session, domains_text and csv_out");
  return guarded([&] { *csv_out = dup_string(session->impl->enumerate(domains_text)); });
}

fc_status fc_report(fc_session* session, const char* request_json, char** report_out) {
  if (!session || !request_json || !report_out)
    return missing("session, request_json and report_out");
  return guarded([&] {
    json request;
    try {
      request = json::parse(request_json);
    } catch (const json::exception& e) {
      throw filtercrawl::ConfigError(std::string("report request is not valid JSON: ") + e.what());
    }
    *report_out = dup_string(session->impl->report(request));
  });
}

fc_status fc_generate_world(const char* params_json, char** world_json_out) {
  if (!world_json_out)
    return missing("world_json_out");
  return guarded([&] {
    json params = json::object();
    if (params_json && *params_json)
      params = json::parse(params_json);
    *world_json_out = dup_string(filtercrawl::generate_world_document(params));
  });
}

} // extern "C"
