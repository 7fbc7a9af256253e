package com.example.accounts;

import java.util.Map;
import java.util.Objects;

/** Runtime settings; secrets come from the environment only. */
public final class AppConfig {
    static final String DB_PASSWORD_VARIABLE = "ACCOUNTS_DB_PASSWORD";
    static final String DB_URL_VARIABLE = "ACCOUNTS_DB_URL";

    private final String databaseUrl;
    private final char[] databasePassword;
    private final int sessionMinutes;

    private AppConfig(String databaseUrl, char[] databasePassword, int sessionMinutes) {
        this.databaseUrl = databaseUrl;
        this.databasePassword = databasePassword;
        this.sessionMinutes = sessionMinutes;
    }

    public static AppConfig fromEnvironment(Map<String, String> env) {
        String url = Objects.requireNonNull(env.get(DB_URL_VARIABLE), DB_URL_VARIABLE + " is not set");
        String pass = Objects.requireNonNull(env.get(DB_PASSWORD_VARIABLE),
                                             DB_PASSWORD_VARIABLE + " is not set");
        int minutes = Integer.parseInt(env.getOrDefault("ACCOUNTS_SESSION_MINUTES", "30"));
        if (minutes < 5 || minutes > 720) {
            throw new IllegalArgumentException("session length out of range");
        }
        return new AppConfig(url, pass.toCharArray(), minutes);
    }

    public String databaseUrl() {
        return databaseUrl;
    }

    public char[] databasePassword() {
        return databasePassword.clone();
    }

    public int sessionMinutes() {
        return sessionMinutes;
    }
}
