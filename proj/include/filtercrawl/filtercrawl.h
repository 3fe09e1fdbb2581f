#ifndef FILTERCRAWL_H
#define FILTERCRAWL_H

/* C interface to the filtercrawl library. Strings returned through out
 * parameters are owned by the caller and released with fc_string_free. */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fc_status {
  FC_OK = 0,
  FC_ERR_INTERNAL = 1,
  FC_ERR_CONFIG = 2,
  FC_ERR_ABORTED = 3, /* run stopped; a snapshot was written */
  FC_ERR_IO = 4,
  FC_ERR_INVALID = 5
} fc_status;

typedef struct fc_session fc_session;

const char* fc_version(void);

/* Message for the last failing call on this thread; empty after success. */
const char* fc_last_error(void);

void fc_string_free(char* s);

/* config_json: run configuration document (NULL or "" for defaults). */
fc_status fc_session_open(const char* config_json, fc_session** out);
void fc_session_close(fc_session* session);

/* Country code of the session's resolver profile. */
fc_status fc_session_country(fc_session* session, char** country_out);

/* One domain per line in, one JSON verdict per line out. */
fc_status fc_check(fc_session* session, const char* domains_text, char** verdicts_jsonl_out);

/* Crawls from the seed list text, writing artifacts to the configured output
 * directory. result_json_out receives {stop_reason, discovered, stats, rejected_seeds}. */
fc_status fc_crawl(fc_session* session, const char* seeds_text, int resume, char** result_json_out);

/* One domain per line in, enumeration CSV out. */
fc_status fc_enumerate(fc_session* session, const char* domains_text, char** csv_out);

/* request_json: {kind, format, log, exclusions, exclude_categories, baseline, top, enumeration, country}. */
fc_status fc_report(fc_session* session, const char* request_json, char** report_out);

/* params_json: {domains, filtered_frac, seed, clique, out_degree, external}. */
fc_status fc_generate_world(const char* params_json, char** world_json_out);

#ifdef __cplusplus
}
#endif

#endif
