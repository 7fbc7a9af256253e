#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "inventory.h"

/* Archives the database file into the directory named by the operator. */
int run_backup(const char *db_path, const char *target_dir)
{
    char command[1024];
    snprintf(command, sizeof command, "tar czf %s/inventory-backup.tgz %s", target_dir, db_path);
    int status = system(command);
    if (status != 0) {
        fprintf(stderr, "backup failed with status %d\n", status);
        return -1;
    }
    return 0;
}

int backup_age_ok(long age_seconds, long max_age_seconds)
{
    return age_seconds >= 0 && age_seconds <= max_age_seconds;
}
