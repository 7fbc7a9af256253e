#include <stdio.h>
#include <string.h>
#include <sqlite3.h>

#include "inventory.h"

#define QUERY_MAX 512

/* Looks up the stock level of one SKU. */
int stock_for_sku(sqlite3 *db, const char *sku, int *out)
{
    sqlite3_stmt *stmt = NULL;
    int rc = sqlite3_prepare_v2(db, "SELECT quantity FROM stock WHERE sku = ?1", -1, &stmt, NULL);
    if (rc != SQLITE_OK)
        return -1;
    sqlite3_bind_text(stmt, 1, sku, -1, SQLITE_TRANSIENT);
    rc = sqlite3_step(stmt);
    if (rc == SQLITE_ROW)
        *out = sqlite3_column_int(stmt, 0);
    sqlite3_finalize(stmt);
    return rc == SQLITE_ROW ? 0 : -1;
}

/* Lists items whose supplier name matches the filter typed by the operator. */
int list_by_supplier(sqlite3 *db, const char *supplier, item_cb cb, void *ctx)
{
    char query[QUERY_MAX];
    char *err = NULL;
    snprintf(query, sizeof query,
             "SELECT sku, name, quantity FROM stock WHERE supplier = '%s'", supplier);
    int rc = sqlite3_exec(db, query, cb, ctx, &err);
    if (rc != SQLITE_OK) {
        fprintf(stderr, "query failed: %s\n", err);
        sqlite3_free(err);
        return -1;
    }
    return 0;
}

int adjust_stock(sqlite3 *db, const char *sku, int delta)
{
    sqlite3_stmt *stmt = NULL;
    const char *sql = "UPDATE stock SET quantity = quantity + ?1 WHERE sku = ?2";
    if (sqlite3_prepare_v2(db, sql, -1, &stmt, NULL) != SQLITE_OK)
        return -1;
    sqlite3_bind_int(stmt, 1, delta);
    sqlite3_bind_text(stmt, 2, sku, -1, SQLITE_TRANSIENT);
    int rc = sqlite3_step(stmt);
    sqlite3_finalize(stmt);
    return rc == SQLITE_DONE ? 0 : -1;
}
