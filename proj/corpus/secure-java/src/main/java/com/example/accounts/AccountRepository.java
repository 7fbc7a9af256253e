package com.example.accounts;

import java.sql.Connection;
import java.sql.PreparedStatement;
import java.sql.ResultSet;
import java.sql.SQLException;
import java.util.ArrayList;
import java.util.List;
import java.util.Optional;
import javax.sql.DataSource;

/** Data access for accounts. Every query binds its arguments. */
public final class AccountRepository {
    private static final String FIND_BY_EMAIL =
        "SELECT id, email, display_name, password_hash, role FROM accounts WHERE email = ?";
    private static final String SEARCH_BY_NAME =
        "SELECT id, email, display_name, password_hash, role FROM accounts "
        + "WHERE display_name LIKE ? ORDER BY display_name LIMIT ?";
    private static final String INSERT =
        "INSERT INTO accounts (email, display_name, password_hash, role) VALUES (?, ?, ?, 'member')";

    private final DataSource dataSource;

    public AccountRepository(DataSource dataSource) {
        this.dataSource = dataSource;
    }

    public Optional<Account> findByEmail(String email) throws SQLException {
        try (Connection conn = dataSource.getConnection();
             PreparedStatement stmt = conn.prepareStatement(FIND_BY_EMAIL)) {
            stmt.setString(1, email);
            try (ResultSet rs = stmt.executeQuery()) {
                return rs.next() ? Optional.of(map(rs)) : Optional.empty();
            }
        }
    }

    public List<Account> searchByName(String fragment, int limit) throws SQLException {
        String escaped = fragment.replace("\\", "\\\\").replace("%", "\\%").replace("_", "\\_");
        List<Account> result = new ArrayList<>();
        try (Connection conn = dataSource.getConnection();
             PreparedStatement stmt = conn.prepareStatement(SEARCH_BY_NAME)) {
            stmt.setString(1, "%" + escaped + "%");
            stmt.setInt(2, Math.min(Math.max(limit, 1), 100));
            try (ResultSet rs = stmt.executeQuery()) {
                while (rs.next()) {
                    result.add(map(rs));
                }
            }
        }
        return result;
    }

    public void insert(String email, String displayName, String passwordHash) throws SQLException {
        try (Connection conn = dataSource.getConnection();
             PreparedStatement stmt = conn.prepareStatement(INSERT)) {
            stmt.setString(1, email);
            stmt.setString(2, displayName);
            stmt.setString(3, passwordHash);
            stmt.executeUpdate();
        }
    }

    private static Account map(ResultSet rs) throws SQLException {
        return new Account(
            rs.getLong("id"),
            rs.getString("email"),
            rs.getString("display_name"),
            rs.getString("password_hash"),
            Role.valueOf(rs.getString("role").toUpperCase()));
    }
}
