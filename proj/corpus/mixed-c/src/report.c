#include <stdio.h>
#include <string.h>

#include "inventory.h"

static void csv_field(FILE *out, const char *value)
{
    fputc('"', out);
    for (const char *p = value; *p; ++p) {
        if (*p == '"')
            fputc('"', out);
        fputc(*p, out);
    }
    fputc('"', out);
}

/* Writes one CSV line per item, quoting every text field. */
int write_csv(FILE *out, const struct item *items, size_t count)
{
    fputs("sku,name,quantity\n", out);
    for (size_t i = 0; i < count; ++i) {
        csv_field(out, items[i].sku);
        fputc(',', out);
        csv_field(out, items[i].name);
        fprintf(out, ",%d\n", items[i].quantity);
    }
    return ferror(out) ? -1 : 0;
}

size_t low_stock(const struct item *items, size_t count, int threshold,
                 const struct item **out, size_t out_cap)
{
    size_t n = 0;
    for (size_t i = 0; i < count && n < out_cap; ++i)
        if (items[i].quantity < threshold)
            out[n++] = &items[i];
    return n;
}
