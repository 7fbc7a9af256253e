package com.example.accounts;

import java.io.IOException;
import java.io.PrintWriter;
import java.sql.SQLException;
import java.util.Optional;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;
import javax.servlet.http.HttpSession;

public final class LoginController {
    private final AccountRepository accounts;
    private final PasswordHasher hasher;
    private final AuditLog audit;

    public LoginController(AccountRepository accounts, PasswordHasher hasher, AuditLog audit) {
        this.accounts = accounts;
        this.hasher = hasher;
        this.audit = audit;
    }

    public void login(HttpServletRequest req, HttpServletResponse resp) throws IOException {
        String email = req.getParameter("email");
        String secret = req.getParameter("password");
        if (email == null || secret == null) {
            resp.sendError(HttpServletResponse.SC_BAD_REQUEST);
            return;
        }
        Optional<Account> account;
        try {
            account = accounts.findByEmail(email.trim().toLowerCase());
        } catch (SQLException e) {
            resp.sendError(HttpServletResponse.SC_SERVICE_UNAVAILABLE);
            return;
        }
        if (account.isEmpty() || !hasher.verify(secret.toCharArray(), account.get().passwordHash())) {
            audit.record("login_failed", email);
            resp.sendError(HttpServletResponse.SC_UNAUTHORIZED);
            return;
        }
        HttpSession old = req.getSession(false);
        if (old != null) {
            old.invalidate();
        }
        HttpSession session = req.getSession(true);
        session.setAttribute("accountId", account.get().id());
        audit.record("login", email);
        resp.sendRedirect("/home");
    }

    public void greet(HttpServletRequest req, HttpServletResponse resp) throws IOException {
        Account me = (Account) req.getAttribute("account");
        resp.setContentType("text/html; charset=UTF-8");
        PrintWriter out = resp.getWriter();
        out.print("<h1>Welcome back, ");
        out.print(Html.escape(me.displayName()));
        out.println("</h1>");
    }

    public void promote(HttpServletRequest req, HttpServletResponse resp) throws IOException {
        Account actor = (Account) req.getAttribute("account");
        if (actor == null || actor.role() != Role.ADMIN) {
            resp.sendError(HttpServletResponse.SC_FORBIDDEN);
            return;
        }
        audit.record("promote_requested", actor.email());
        resp.setStatus(HttpServletResponse.SC_ACCEPTED);
    }
}
