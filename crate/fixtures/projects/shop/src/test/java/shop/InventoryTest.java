package shop;

import static org.junit.Assert.assertEquals;
import static org.junit.Assert.assertFalse;
import static org.junit.Assert.assertTrue;

import org.junit.Test;

public class InventoryTest {
    @Test
    public void addAccumulates() {
        Inventory inv = new Inventory();
        inv.add("pen", 2);
        inv.add("pen", 3);
        assertEquals(5, inv.count("pen"));
        assertEquals(0, inv.count("ink"));
    }

    @Test
    public void takeNeedsStock() {
        Inventory inv = new Inventory();
        inv.add("pen", 1);
        assertTrue(inv.take("pen", 1));
        assertFalse(inv.take("pen", 1));
        assertEquals(0, inv.count("pen"));
    }
}
