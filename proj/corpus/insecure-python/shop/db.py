"""Database helpers for the shop backend."""
import sqlite3

DB_PATH = "shop.db"


def connect():
    conn = sqlite3.connect(DB_PATH)
    conn.row_factory = sqlite3.Row
    return conn


def get_customer(customer_id):
    conn = connect()
    query = "SELECT id, name, email FROM customers WHERE id = " + customer_id
    row = conn.execute(query).fetchone()
    conn.close()
    return dict(row) if row else None


def search_products(term, category):
    conn = connect()
    cur = conn.cursor()
    cur.execute(f"SELECT id, title, price FROM products WHERE title LIKE '%{term}%' AND category = '{category}'")
    rows = [dict(r) for r in cur.fetchall()]
    conn.close()
    return rows


def record_order(customer_id, product_id, quantity):
    conn = connect()
    conn.execute(
        "INSERT INTO orders (customer_id, product_id, quantity) VALUES (?, ?, ?)",
        (customer_id, product_id, quantity),
    )
    conn.commit()
    conn.close()
