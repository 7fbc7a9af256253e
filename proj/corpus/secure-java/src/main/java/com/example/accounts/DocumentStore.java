package com.example.accounts;

import java.io.IOException;
import java.io.InputStream;
import java.nio.file.Files;
import java.nio.file.Path;
import java.util.regex.Pattern;

/** Serves user documents from a single base directory. */
public final class DocumentStore {
    private static final Pattern SAFE_NAME = Pattern.compile("[A-Za-z0-9._-]{1,128}");
    private final Path base;

    public DocumentStore(Path base) throws IOException {
        this.base = base.toRealPath();
    }

    public InputStream open(long ownerId, String name) throws IOException {
        if (!SAFE_NAME.matcher(name).matches() || name.startsWith(".")) {
            throw new IllegalArgumentException("invalid document name");
        }
        Path ownerDir = base.resolve(Long.toString(ownerId));
        Path target = ownerDir.resolve(name).normalize();
        if (!target.startsWith(ownerDir)) {
            throw new SecurityException("document outside owner directory");
        }
        return Files.newInputStream(target);
    }

    public long size(long ownerId, String name) throws IOException {
        try (InputStream in = open(ownerId, name)) {
            return in.transferTo(java.io.OutputStream.nullOutputStream());
        }
    }
}
