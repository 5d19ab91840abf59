#ifndef FPCHAIN_FPCHAIN_H
#define FPCHAIN_FPCHAIN_H

/* C interface to the fpchain library. Objects are opaque handles owned by the
 * caller and released with the matching *_destroy function. Every call that
 * can fail returns an fpc_status; on failure fpc_last_error_message() holds a
 * description for the calling thread until its next failing call. Structured
 * results are returned as JSON text in an fpc_result. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FPC_API __declspec(dllexport)
#else
#define FPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fpc_status {
  FPC_OK = 0,
  FPC_ERR_INVALID_ARGUMENT = 1,
  FPC_ERR_PARSE = 2,
  FPC_ERR_NOT_PRIME = 3,
  FPC_ERR_MISSING_POLE_ASSIGNMENT = 4,
  FPC_ERR_NOT_A_BIJECTION = 5,
  FPC_ERR_MODE_MISMATCH = 6,
  FPC_ERR_NON_UNIQUE_RECURRENT_CLASS = 7,
  FPC_ERR_WRONG_RESIDUE_CLASS = 8,
  FPC_ERR_BUDGET_EXCEEDED = 9,
  FPC_ERR_CONSTANT_PHASE = 10,
  FPC_ERR_TRIVIAL_SUBSET = 11,
  FPC_ERR_TOO_LARGE = 12,
  FPC_ERR_NOT_SYMMETRIC = 13,
  FPC_ERR_AVERAGE_TOO_SMALL = 14,
  FPC_ERR_IO = 15,
  FPC_ERR_CONFIG = 16,
  FPC_ERR_INTERNAL = 99
} fpc_status;

typedef struct fpc_map fpc_map;
typedef struct fpc_chain fpc_chain;
typedef struct fpc_result fpc_result;

FPC_API const char* fpc_last_error_message(void);
FPC_API const char* fpc_status_name(fpc_status status);

/* JSON payload of a result; valid until fpc_result_destroy. */
FPC_API const char* fpc_result_text(const fpc_result* result);
FPC_API void fpc_result_destroy(fpc_result* result);

/* Maps over F_p: square | cube | inverse | linear:a=<a> |
 * rational:P=<c0,c1,..>;Q=<c0,..>[;poles=<x:v,..>] | compose:shift=<g>;base=<map> */
FPC_API fpc_status fpc_map_create(uint64_t p, const char* descriptor, fpc_map** out);
FPC_API void fpc_map_destroy(fpc_map* map);
FPC_API uint64_t fpc_map_modulus(const fpc_map* map);
/* Copies the value table; length must equal p. */
FPC_API fpc_status fpc_map_table(const fpc_map* map, uint32_t* out, size_t length);
FPC_API fpc_status fpc_map_classify(const fpc_map* map, int* is_bijection, int* is_linear_or_constant,
                                    int* in_class);

/* chain:<lazy|noisezero|additive|nonlazy>;map=<map>;gamma=<g>;p=<p> */
FPC_API fpc_status fpc_chain_create(const char* descriptor, fpc_chain** out);
FPC_API void fpc_chain_destroy(fpc_chain* chain);
FPC_API uint64_t fpc_chain_modulus(const fpc_chain* chain);
/* Writes steps + 1 states into out. */
FPC_API fpc_status fpc_chain_sample_path(const fpc_chain* chain, uint64_t x0, uint64_t steps, uint64_t seed,
                                         uint64_t* out, size_t length);
/* mode: "exact", "float" or "auto". */
FPC_API fpc_status fpc_chain_stationary(const fpc_chain* chain, const char* mode, fpc_result** out);
/* starts: "default", "all", "sampled" or a comma separated state list.
 * trajectory_csv may be NULL; otherwise the TV trajectory is written there. */
FPC_API fpc_status fpc_chain_mixing(const fpc_chain* chain, double epsilon, const char* starts, uint64_t seed,
                                    uint64_t cap, const char* trajectory_csv, fpc_result** out);

FPC_API fpc_status fpc_cheeger_exact(const fpc_chain* chain, int allow_large, fpc_result** out);
/* families: comma separated subset of intervals,ap_unions,quadratic_residues,random. */
FPC_API fpc_status fpc_cheeger_search(const fpc_chain* chain, const char* families, uint64_t budget, uint64_t seed,
                                      fpc_result** out);
FPC_API fpc_status fpc_cheeger_tvbound(const fpc_chain* chain, double c, fpc_result** out);

/* Primes in [lo, hi], optionally restricted to p = residue_mod4 (mod 4) when
 * residue_mod4 is 1 or 3. Writes at most capacity values; *count receives the
 * total number found. */
FPC_API fpc_status fpc_primes_in_range(uint64_t lo, uint64_t hi, int residue_mod4, uint64_t* out, size_t capacity,
                                       size_t* count);

/* Limit of the support fraction plus the measured fractions for each prime. */
FPC_API fpc_status fpc_conjecture(const uint64_t* primes, size_t count, int64_t gamma, fpc_result** out);

typedef struct fpc_expsum_request {
  const char* kind;    /* weil | avg | family | linear | count */
  uint64_t p;
  const char* map;     /* unused by linear */
  int64_t k;
  int64_t alpha;       /* weil */
  uint64_t interval_start;
  uint64_t interval_length; /* avg */
  int exact;           /* avg: also compute the exact residue-count value */
  const char* family;  /* family, linear, count: delta=<d>;aps=<start:len,...> */
  const char* family2; /* count: target family */
  double epsilon;      /* count */
} fpc_expsum_request;

FPC_API fpc_status fpc_expsum(const fpc_expsum_request* request, fpc_result** out);

/* Runs a sweep config and writes its reports. The result holds
 * {"rows", "error_rows", "paths"}; a bad config returns FPC_ERR_CONFIG. */
FPC_API fpc_status fpc_sweep(const char* config_path, int allow_empty, fpc_result** out);

#ifdef __cplusplus
}
#endif

#endif /* FPCHAIN_FPCHAIN_H */
